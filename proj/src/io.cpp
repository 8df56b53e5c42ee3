#include "trop/io.hpp"

#include <fstream>
#include <sstream>

namespace trop {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw IoError("ParseError", msg); }

const json& need(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
    return j.at(key);
}

int int_of(const json& j, const char* what) {
    if (!j.is_number_integer()) bad(std::string(what) + " must be an integer");
    return j.get<int>();
}

template <class T, class F>
std::vector<T> list_of(const json& j, F&& f) {
    if (!j.is_array()) bad("expected a list");
    std::vector<T> out;
    for (auto& e : j) out.push_back(f(e));
    return out;
}

json qmat_to_json(const Mat<Q>& m) {
    json out = json::array();
    for (auto& r : m) out.push_back(qvec_to_json(r));
    return out;
}

Mat<Q> qmat_from_json(const json& j) { return list_of<QVec>(j, qvec_from_json); }

json opt_q(const std::optional<Q>& q) { return q ? q_to_json(*q) : json(nullptr); }
std::optional<Q> opt_q_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return q_from_json(j);
}

json poly_to_json(const Poly& p) {
    json out = json::array();
    for (auto& [e, c] : p.t) out.push_back({{"e", e}, {"c", q_to_json(c)}});
    return out;
}

Poly poly_from_json(const json& j) {
    Poly p;
    if (!j.is_array()) bad("polynomial must be a list of terms");
    for (auto& t : j) p.add_term(need(t, "e").get<std::vector<int>>(), q_from_json(need(t, "c")));
    return p;
}

json weight_to_json(const Weight& w) {
    json out = json::object();
    if (w.pol != Poly(1)) out["pol"] = poly_to_json(w.pol);
    if (!w.quad.empty()) out["quad"] = qmat_to_json(w.quad);
    if (!w.lin.empty()) out["lin"] = qvec_to_json(w.lin);
    if (w.cst != 0) out["cst"] = q_to_json(w.cst);
    return out;
}

Weight weight_from_json(const json& j) {
    Weight w;
    if (j.contains("pol")) w.pol = poly_from_json(j["pol"]);
    if (j.contains("quad")) w.quad = qmat_from_json(j["quad"]);
    if (j.contains("lin")) w.lin = qvec_from_json(j["lin"]);
    if (j.contains("cst")) w.cst = q_from_json(j["cst"]);
    return w;
}

json pair_to_json(Mask I, Mask J) { return json{{"I", mask_to_json(I)}, {"J", mask_to_json(J)}}; }

template <class S>
json superform_to_json(const Superform<S>& a, const std::function<json(const S&)>& coef) {
    json terms = json::array();
    for (auto& [m, v] : a.c) {
        json t = pair_to_json(mono_i(m, a.n), mono_j(m, a.n));
        t["c"] = coef(v);
        terms.push_back(t);
    }
    json out{{"n", a.n}};
    if (!a.c.empty()) {
        auto [p, q] = a.bidegree();
        out["p"] = p;
        out["q"] = q;
    }
    out["terms"] = terms;
    return out;
}

json answer_json(Answer a) { return to_string(a); }

}  // namespace

json q_to_json(const Q& q) {
    if (q.get_den() == 1 && q.get_num().fits_slong_p()) return q.get_num().get_si();
    return to_string(q);
}

Q q_from_json(const json& j) {
    if (j.is_number_integer()) return Q(j.get<long>());
    if (j.is_string()) {
        try {
            return parse_rational(j.get<std::string>());
        } catch (const std::exception& e) {
            bad("bad rational '" + j.get<std::string>() + "'");
        }
    }
    bad("rational must be an integer or an \"a/b\" string");
}

json qvec_to_json(const QVec& v) {
    json out = json::array();
    for (auto& x : v) out.push_back(q_to_json(x));
    return out;
}

QVec qvec_from_json(const json& j) { return list_of<Q>(j, q_from_json); }

json mask_to_json(Mask m) {
    json out = json::array();
    for (int i : mask_elements(m)) out.push_back(i + 1);
    return out;
}

Mask mask_from_json(const json& j, int n) {
    Mask m = 0;
    for (int i : list_of<int>(j, [](const json& e) { return int_of(e, "index"); })) {
        if (i < 1 || i > n) bad("index " + std::to_string(i) + " out of range 1.." + std::to_string(n));
        m |= Mask(1) << (i - 1);
    }
    return m;
}

json to_json(const LForm& a) {
    return superform_to_json<Q>(a, [](const Q& v) { return q_to_json(v); });
}

json to_json(const CForm& a) {
    return superform_to_json<QC>(a, [](const QC& v) { return json{{"re", q_to_json(v.re)}, {"im", q_to_json(v.im)}}; });
}

LForm lform_from_json(const json& j) {
    if (j.contains("builtin")) {
        std::string b = j["builtin"].get<std::string>();
        if (b == "omega_example") return omega_example();
        if (b == "omega_explicit") return omega_explicit();
        if (b == "tau") return tau(int_of(need(j, "n"), "n"));
        bad("unknown builtin form '" + b + "'");
    }
    int n = int_of(need(j, "n"), "n");
    if (n < 1 || n > 16) bad("form dimension out of range");
    LForm a(n);
    for (auto& t : need(j, "terms")) {
        Mask I = mask_from_json(need(t, "I"), n), J = mask_from_json(need(t, "J"), n);
        a.add(make_mono(I, J, n), q_from_json(need(t, "c")));
    }
    if (j.contains("p") && j.contains("q") && !a.is_zero()) {
        auto [p, q] = a.bidegree();
        if (p != j["p"].get<int>() || q != j["q"].get<int>()) bad("terms do not match the declared bidegree");
    }
    return a;
}

Fan fan_from_json(const json& j) {
    if (j.contains("builtin")) {
        std::string b = j["builtin"].get<std::string>();
        if (b == "projective_plane") return projective_plane_fan();
        if (b == "orthant") return orthant_fan(int_of(need(j, "rank"), "rank"));
        bad("unknown builtin fan '" + b + "'");
    }
    int n = int_of(need(j, "rank"), "rank");
    auto cones = list_of<std::vector<IVec>>(need(j, "cones"), [](const json& c) {
        return list_of<IVec>(c, [](const json& g) { return g.get<IVec>(); });
    });
    try {
        return validate_fan(n, cones);
    } catch (const FanError& e) {
        throw IoError("ValidationError", std::string(e.what()));
    }
}

json to_json(const Fan& f) {
    json cones = json::array();
    for (auto& c : f.cones)
        if (c.dim > 0) cones.push_back(c.generators);
    return json{{"rank", f.n}, {"cones", cones}};
}

json to_json(const CompactifiedPoint& p, const Fan& f) {
    return json{{"stratum", p.stratum},
                {"cone", f.cones.at(static_cast<std::size_t>(p.stratum)).generators},
                {"coords", qvec_to_json(p.coords)}};
}

json to_json(const ChartPoint& p) { return json{{"infinite", mask_to_json(p.infinite)}, {"u", qvec_to_json(p.u)}}; }

ChartPoint point_from_json(const json& j, int n) {
    if (j.is_array()) return finite_point(qvec_from_json(j));
    ChartPoint p;
    p.infinite = j.contains("infinite") ? mask_from_json(j["infinite"], n) : 0;
    p.u = qvec_from_json(need(j, "u"));
    if (static_cast<int>(p.u.size()) != n) bad("point has the wrong number of coordinates");
    for (int i : mask_elements(p.infinite)) p.u[static_cast<std::size_t>(i)] = 0;
    return p;
}

json to_json(const Polyhedron& p) { return json{{"dim", p.dim}, {"G", qmat_to_json(p.G)}, {"h", qvec_to_json(p.h)}}; }

Polyhedron polyhedron_from_json(const json& j, int dim) {
    if (j.contains("box")) {
        std::vector<std::pair<std::optional<Q>, std::optional<Q>>> iv;
        for (auto& r : j["box"]) {
            if (!r.is_array() || r.size() != 2) bad("box entries are [lo, hi] with null for an open end");
            iv.emplace_back(opt_q_from(r[0]), opt_q_from(r[1]));
        }
        if (static_cast<int>(iv.size()) != dim) bad("box has the wrong dimension");
        return Polyhedron::box(iv);
    }
    Polyhedron p = Polyhedron::whole(dim);
    if (j.contains("G")) {
        auto G = qmat_from_json(j["G"]);
        auto h = qvec_from_json(need(j, "h"));
        if (G.size() != h.size()) bad("G and h have different lengths");
        for (std::size_t r = 0; r < G.size(); ++r) {
            if (static_cast<int>(G[r].size()) != dim) bad("constraint row has the wrong length");
            p.add(G[r], h[r]);
        }
    }
    return p;
}

json to_json(const PieceMeasure& m) {
    json atoms = json::array(), dens = json::array(), datoms = json::array();
    for (auto& a : m.atoms) {
        json e{{"at", to_json(a.pt)}, {"w", q_to_json(a.w)}};
        if (a.pi_power != 0) e["pi_power"] = a.pi_power;
        atoms.push_back(e);
    }
    for (auto& d : m.densities) {
        json e{{"stratum", mask_to_json(d.stratum)}, {"A", qmat_to_json(d.A)}, {"b", qvec_to_json(d.b)},
               {"poly", to_json(d.poly)}, {"weight", weight_to_json(d.w)}, {"coef", q_to_json(d.sign * d.coef)}};
        if (d.pi_power != 0) e["pi_power"] = d.pi_power;
        dens.push_back(e);
    }
    for (auto& a : m.derivative_atoms)
        datoms.push_back({{"at", to_json(a.pt)}, {"dir", qvec_to_json(a.dir)}, {"w", q_to_json(a.w)}});
    json out{{"atoms", atoms}, {"densities", dens}};
    if (!datoms.empty()) out["derivative_atoms"] = datoms;
    return out;
}

PieceMeasure measure_from_json(const json& j, int n) {
    PieceMeasure m(n);
    if (j.contains("atoms"))
        for (auto& a : j["atoms"]) {
            Atom at = dirac(point_from_json(need(a, "at"), n), q_from_json(need(a, "w")));
            if (a.contains("pi_power")) at.pi_power = int_of(a["pi_power"], "pi_power");
            m.atoms.push_back(at);
        }
    if (j.contains("densities"))
        for (auto& d : j["densities"]) {
            if (d.contains("lebesgue_box")) {
                std::vector<std::pair<std::optional<Q>, std::optional<Q>>> iv;
                for (auto& r : d["lebesgue_box"]) iv.emplace_back(opt_q_from(r.at(0)), opt_q_from(r.at(1)));
                if (static_cast<int>(iv.size()) != n) bad("lebesgue_box has the wrong dimension");
                Q c = d.contains("coef") ? q_from_json(d["coef"]) : Q(1);
                try {
                    m.densities.push_back(lebesgue_box(n, iv, c));
                } catch (const MeasureError& e) {
                    throw IoError("ValidationError", e.what());
                }
                continue;
            }
            Mask stratum = d.contains("stratum") ? mask_from_json(d["stratum"], n) : 0;
            Mat<Q> A = qmat_from_json(need(d, "A"));
            QVec b = qvec_from_json(need(d, "b"));
            if (static_cast<int>(A.size()) != n || static_cast<int>(b.size()) != n) bad("density frame has the wrong size");
            int k = A.empty() ? 0 : static_cast<int>(A[0].size());
            Polyhedron poly = d.contains("poly") ? polyhedron_from_json(d["poly"], k) : Polyhedron::whole(k);
            Weight w = d.contains("weight") ? weight_from_json(d["weight"]) : Weight{};
            Q c = d.contains("coef") ? q_from_json(d["coef"]) : Q(1);
            try {
                Density den = make_density(n, stratum, A, b, poly, w, c);
                if (d.contains("pi_power")) den.pi_power = int_of(d["pi_power"], "pi_power");
                m.densities.push_back(den);
            } catch (const MeasureError& e) {
                throw IoError("ValidationError", e.what());
            }
        }
    if (j.contains("derivative_atoms"))
        for (auto& a : j["derivative_atoms"])
            m.derivative_atoms.push_back(DerivativeAtom{point_from_json(need(a, "at"), n), qvec_from_json(need(a, "dir")),
                                                        a.contains("w") ? q_from_json(a["w"]) : Q(1)});
    m.normalize();
    return m;
}

json to_json(const OpenSet& U) {
    json lo = json::array(), hi = json::array(), ex = json::array();
    for (auto& x : U.lo) lo.push_back(opt_q(x));
    for (auto& x : U.hi) hi.push_back(opt_q(x));
    for (Mask e : U.excluded) ex.push_back(mask_to_json(e));
    return json{{"n", U.n}, {"infinite", mask_to_json(U.infinite)}, {"lo", lo}, {"hi", hi}, {"excluded", ex}};
}

OpenSet open_set_from_json(const json& j, int n) {
    OpenSet U = OpenSet::whole(n, j.contains("infinite") ? mask_from_json(j["infinite"], n) : 0);
    auto bounds = [&](const char* key, std::vector<std::optional<Q>>& into) {
        if (!j.contains(key)) return;
        auto v = list_of<std::optional<Q>>(j[key], opt_q_from);
        if (static_cast<int>(v.size()) != n) bad(std::string(key) + " has the wrong length");
        into = v;
    };
    bounds("lo", U.lo);
    bounds("hi", U.hi);
    if (j.contains("excluded"))
        for (auto& e : j["excluded"]) U.excluded.push_back(mask_from_json(e, n));
    try {
        U.validate();
    } catch (const std::exception& e) {
        throw IoError("ValidationError", e.what());
    }
    return U;
}

json to_json(const CoefficientFn& f) {
    json terms = json::array();
    for (auto& t : f.terms()) {
        json e{{"c", q_to_json(t.c)}};
        if (std::any_of(t.a.begin(), t.a.end(), [](int x) { return x != 0; })) e["a"] = t.a;
        if (std::any_of(t.ell.begin(), t.ell.end(), [](const Q& x) { return x != 0; })) e["ell"] = qvec_to_json(t.ell);
        if (!t.factors.empty()) {
            json fs = json::array();
            for (auto& fa : t.factors)
                fs.push_back({{"axis", fa.axis + 1},
                              {"kind", fa.kind == FactorKind::Bump ? "bump" : "step"},
                              {"order", fa.order},
                              {"scale", q_to_json(fa.scale)},
                              {"shift", q_to_json(fa.shift)}});
            e["factors"] = fs;
        }
        terms.push_back(e);
    }
    return terms;
}

CoefficientFn coefficient_from_json(const json& j, int n) {
    CoefficientFn f(n);
    for (auto& t : list_of<json>(j, [](const json& e) { return e; })) {
        Term term{q_from_json(need(t, "c")), std::vector<int>(static_cast<std::size_t>(n), 0),
                  QVec(static_cast<std::size_t>(n), Q(0)), {}};
        if (t.contains("a")) term.a = t["a"].get<std::vector<int>>();
        if (t.contains("ell")) term.ell = qvec_from_json(t["ell"]);
        if (static_cast<int>(term.a.size()) != n || static_cast<int>(term.ell.size()) != n)
            bad("coefficient term has the wrong dimension");
        if (t.contains("factors"))
            for (auto& fa : t["factors"]) {
                Factor x;
                x.axis = int_of(need(fa, "axis"), "axis") - 1;
                if (x.axis < 0 || x.axis >= n) bad("factor axis out of range");
                std::string kind = need(fa, "kind").get<std::string>();
                if (kind != "bump" && kind != "step") bad("factor kind must be bump or step");
                x.kind = kind == "bump" ? FactorKind::Bump : FactorKind::Step;
                x.order = fa.contains("order") ? int_of(fa["order"], "order") : 0;
                x.scale = q_from_json(need(fa, "scale"));
                x.shift = q_from_json(need(fa, "shift"));
                if (x.scale == 0) bad("factor scale must be nonzero");
                term.factors.push_back(x);
            }
        f.add_term(term);
    }
    return f;
}

json to_json(const LagerbergFormField& a) {
    json coeffs = json::array();
    for (auto& [m, f] : a.coeffs) {
        json e = pair_to_json(mono_i(m, a.n), mono_j(m, a.n));
        e["f"] = to_json(f);
        coeffs.push_back(e);
    }
    json out{{"n", a.n}, {"infinite", mask_to_json(a.infinite)}, {"coeffs", coeffs}};
    if (std::any_of(a.threshold.begin(), a.threshold.end(), [](double t) { return t != 0; })) out["threshold"] = a.threshold;
    return out;
}

LagerbergFormField field_from_json(const json& j) {
    int n = int_of(need(j, "n"), "n");
    LagerbergFormField a(n, j.contains("infinite") ? mask_from_json(j["infinite"], n) : 0);
    for (auto& e : need(j, "coeffs"))
        a.add(make_mono(mask_from_json(need(e, "I"), n), mask_from_json(need(e, "J"), n), n),
              coefficient_from_json(need(e, "f"), n));
    if (j.contains("threshold")) {
        a.threshold = j["threshold"].get<std::vector<double>>();
        if (static_cast<int>(a.threshold.size()) != n) bad("threshold has the wrong length");
    }
    return a;
}

json to_json(const InvariantComplexFormField& a) {
    json coeffs = json::array();
    for (auto& [m, g] : a.coeffs) {
        json e = pair_to_json(mono_i(m, a.n), mono_j(m, a.n));
        e["re"] = to_json(g.re);
        e["im"] = to_json(g.im);
        coeffs.push_back(e);
    }
    return json{{"n", a.n}, {"infinite", mask_to_json(a.infinite)}, {"sqrt_pi_power", a.sqrt_pi_power}, {"coeffs", coeffs}};
}

json to_json(const WeightedComplex& c) {
    json cells = json::array();
    for (auto& cell : c.cells)
        cells.push_back({{"A", qmat_to_json(cell.A)}, {"b", qvec_to_json(cell.b)}, {"poly", to_json(cell.poly)}, {"weight", cell.weight}});
    return json{{"n", c.n}, {"dim", c.dim}, {"cells", cells}};
}

WeightedComplex complex_from_json(const json& j) {
    WeightedComplex c;
    if (j.contains("builtin")) {
        std::string b = j["builtin"].get<std::string>();
        if (b != "tropical_line") bad("unknown builtin complex '" + b + "'");
        QVec apex = j.contains("apex") ? qvec_from_json(j["apex"]) : QVec{Q(0), Q(0)};
        std::vector<long> w = j.contains("weights") ? j["weights"].get<std::vector<long>>() : std::vector<long>{1, 1, 1};
        if (w.size() != 3 || apex.size() != 2) bad("tropical_line takes a 2D apex and three weights");
        c = tropical_line(apex, w[0], w[1], w[2]);
    } else {
        c.n = int_of(need(j, "n"), "n");
        c.dim = int_of(need(j, "dim"), "dim");
        for (auto& e : need(j, "cells")) {
            long w = e.contains("weight") ? e["weight"].get<long>() : 1;
            if (e.contains("segment")) {
                auto& s = e["segment"];
                if (!s.is_array() || s.size() != 2) bad("segment is a pair of points");
                c.cells.push_back(segment_cell(qvec_from_json(s[0]), qvec_from_json(s[1]), w));
            } else if (e.contains("ray")) {
                c.cells.push_back(ray_cell(qvec_from_json(need(e["ray"], "origin")),
                                           need(e["ray"], "dir").get<std::vector<long>>(), w));
            } else {
                Mat<Q> A = qmat_from_json(need(e, "A"));
                int k = A.empty() ? 0 : static_cast<int>(A[0].size());
                c.cells.push_back(Cell{A, qvec_from_json(need(e, "b")), polyhedron_from_json(need(e, "poly"), k), w});
            }
        }
    }
    try {
        validate_complex(c);
    } catch (const std::exception& e) {
        throw IoError("ValidationError", e.what());
    }
    return c;
}

json to_json(const LagerbergCurrent& t) {
    json out{{"n", t.n}, {"q", t.q}, {"bidegree", {t.p(), t.p()}}, {"U", to_json(t.U)}};
    if (!t.label.empty()) out["label"] = t.label;
    if (t.has_evaluator()) {
        out["evaluator"] = true;
        return out;
    }
    json co = json::array();
    for (auto& [key, m] : t.co) {
        json e = pair_to_json(key.first, key.second);
        e["measure"] = to_json(m);
        co.push_back(e);
    }
    out["cocoeffs"] = co;
    if (t.complex) out["complex"] = to_json(*t.complex);
    return out;
}

LagerbergCurrent current_from_json(const json& j) {
    if (j.contains("builtin")) {
        std::string b = j["builtin"].get<std::string>();
        LagerbergCurrent t;
        if (b == "gaussian_density") t = gaussian_density_current();
        else if (b == "exponential_density") t = exponential_density_current(q_from_json(need(j, "rate")));
        else if (b == "double_exponential_evaluator") t = double_exponential_evaluator_current();
        else if (b == "derivative_atom") {
            QVec pt = qvec_from_json(need(j, "point"));
            t = derivative_atom_current(static_cast<int>(pt.size()), pt, qvec_from_json(need(j, "dir")));
        } else {
            bad("unknown builtin current '" + b + "'");
        }
        // Strata taken out of the domain, e.g. before an extension by zero.
        if (j.contains("excluded")) {
            for (auto& e : j["excluded"]) t.U.excluded.push_back(mask_from_json(e, t.n));
            try {
                validate(t);
            } catch (const std::exception& e) {
                throw IoError("ValidationError", e.what());
            }
        }
        return t;
    }
    if (j.contains("form")) return form_current(lform_from_json(j["form"]));
    if (j.contains("wedge")) {
        // Constant form times a current.
        LForm b = lform_from_json(need(j["wedge"], "form"));
        auto t = current_from_json(need(j["wedge"], "current"));
        if (b.n != t.n) bad("form and current live in different dimensions");
        return wedge_with_form(LagerbergFormField::from_form(b, CoefficientFn::constant(b.n, 1), t.U.infinite), t);
    }
    if (j.contains("complex") && !j.contains("cocoeffs")) return integration_current(complex_from_json(j["complex"]));
    int n = int_of(need(j, "n"), "n");
    int q = int_of(need(j, "q"), "q");
    if (n < 1 || n > 8 || q < 0 || q > n) bad("current dimension or degree out of range");
    LagerbergCurrent t(j.contains("U") ? open_set_from_json(j["U"], n) : OpenSet::whole(n), q);
    if (j.contains("label")) t.label = j["label"].get<std::string>();
    for (auto& e : need(j, "cocoeffs")) {
        Mask I = mask_from_json(need(e, "I"), n), J = mask_from_json(need(e, "J"), n);
        if (popcount(I) != q || popcount(J) != q) bad("co-coefficient index sets must have size q");
        t.add(I, J, measure_from_json(need(e, "measure"), n));
    }
    t.normalize();
    try {
        validate(t);
    } catch (const std::exception& e) {
        throw IoError("ValidationError", e.what());
    }
    return t;
}

json to_json(const InvariantComplexCurrent& s) {
    json out{{"shadow", true}, {"n", s.n}, {"q", s.q}, {"bidegree", {s.p(), s.p()}}, {"U", to_json(s.U)}};
    if (!s.label.empty()) out["label"] = s.label;
    json co = json::array();
    for (auto& [key, m] : s.shadow) {
        json e = pair_to_json(key.first, key.second);
        e["measure"] = to_json(m);
        co.push_back(e);
    }
    out["cocoeffs"] = co;
    json ker = json::array();
    for (auto& k : s.kernel) {
        json e = pair_to_json(k.I, k.J);
        e["at"] = to_json(k.pt);
        e["w"] = q_to_json(k.w);
        ker.push_back(e);
    }
    out["kernel"] = ker;
    return out;
}

InvariantComplexCurrent shadow_from_json(const json& j) {
    if (j.contains("builtin")) {
        std::string b = j["builtin"].get<std::string>();
        if (b == "origin_point_mass_p1") return origin_point_mass_p1();
        bad("unknown builtin shadow current '" + b + "'");
    }
    int n = int_of(need(j, "n"), "n");
    int q = int_of(need(j, "q"), "q");
    if (n < 1 || n > 8 || q < 0 || q > n) bad("current dimension or degree out of range");
    InvariantComplexCurrent s(j.contains("U") ? open_set_from_json(j["U"], n) : OpenSet::whole(n), q);
    if (j.contains("label")) s.label = j["label"].get<std::string>();
    if (j.contains("cocoeffs"))
        for (auto& e : j["cocoeffs"]) {
            Mask I = mask_from_json(need(e, "I"), n), J = mask_from_json(need(e, "J"), n);
            if (popcount(I) != q || popcount(J) != q) bad("shadow index sets must have size q");
            s.add(I, J, measure_from_json(need(e, "measure"), n));
        }
    if (j.contains("kernel"))
        for (auto& e : j["kernel"])
            s.kernel.push_back(KernelAtom{point_from_json(need(e, "at"), n), mask_from_json(need(e, "I"), n),
                                          mask_from_json(need(e, "J"), n), e.contains("w") ? q_from_json(e["w"]) : Q(1)});
    s.normalize();
    try {
        validate_shadow(s);
    } catch (const std::exception& e) {
        throw IoError("ValidationError", e.what());
    }
    return s;
}

json to_json(const PositivityVerdict& v) {
    json out{{"tier", to_string(v.tier)}, {"answer", answer_json(v.answer)}, {"reason", v.reason}};
    if (!v.certificate.empty()) {
        json cert = json::array();
        for (auto& t : v.certificate) cert.push_back({{"weight", q_to_json(t.weight)}, {"alpha", to_json(t.alpha)}});
        out["certificate"] = cert;
    }
    if (v.witness) out["witness"] = to_json(*v.witness);
    if (v.witness_pairing) out["witness_pairing"] = q_to_json(*v.witness_pairing);
    if (v.plucker) {
        json rb = json::array();
        for (auto& r : v.plucker->range_basis) rb.push_back(qvec_to_json(r));
        out["plucker"] = {{"range_basis", rb}, {"quadric", v.plucker->quadric}, {"restricted", qmat_to_json(v.plucker->restricted)}};
    }
    if (v.asymmetry) {
        auto [a, b] = *v.asymmetry;
        out["asymmetry"] = {a, b};
    }
    return out;
}

json to_json(const CurrentPositivity& r) {
    json out{{"answer", answer_json(r.answer)}, {"reason", r.reason}};
    if (r.asymmetric) out["asymmetric"] = pair_to_json(r.asymmetric->first, r.asymmetric->second);
    if (r.estimate)
        out["estimate"] = {{"I", mask_to_json(r.estimate->I)}, {"J", mask_to_json(r.estimate->J)},
                           {"lambda_I", q_to_json(r.estimate->lambda_I)}, {"lambda_J", q_to_json(r.estimate->lambda_J)},
                           {"where", r.estimate->where}};
    if (!r.group_indices.empty()) {
        json g = json::array();
        for (Mask m : r.group_indices) g.push_back(mask_to_json(m));
        out["group_indices"] = g;
        out["lambda"] = qvec_to_json(r.lambda);
    }
    if (r.witness_form) {
        out["witness_form"] = to_json(*r.witness_form);
        out["witness_value"] = r.witness_value;
    }
    return out;
}

json to_json(const ComplexPositivity& r) {
    json out{{"answer", answer_json(r.answer)}, {"reason", r.reason}, {"min_eigenvalue", r.min_eigenvalue}};
    if (r.asymmetric) out["asymmetric"] = pair_to_json(r.asymmetric->first, r.asymmetric->second);
    if (r.estimate)
        out["estimate"] = {{"I", mask_to_json(r.estimate->I)}, {"J", mask_to_json(r.estimate->J)},
                           {"lambda_I", q_to_json(r.estimate->lambda_I)}, {"lambda_J", q_to_json(r.estimate->lambda_J)},
                           {"where", r.estimate->where}};
    if (r.where) out["where"] = to_json(*r.where);
    if (r.witness_form) {
        out["witness_form"] = to_json(*r.witness_form);
        out["witness_value"] = r.witness_value;
    }
    return out;
}

json to_json(const ClosednessResult& r) {
    json out{{"closed", answer_json(r.closed)}, {"max_residual", r.max_residual}, {"message", r.message}};
    if (r.balanced) out["balanced"] = *r.balanced;
    if (r.witness) out["witness"] = to_json(*r.witness);
    return out;
}

json to_json(const CFiniteResult& r) {
    json out{{"answer", answer_json(r.answer)}, {"message", r.message}};
    if (r.answer == Answer::No) {
        out["I"] = mask_to_json(r.I);
        out["J"] = mask_to_json(r.J);
        out["toward"] = mask_to_json(r.detail.toward);
        out["piece"] = r.detail.piece;
        if (r.detail.ray) out["ray"] = qvec_to_json(*r.detail.ray);
    }
    return out;
}

json to_json(const BalancingResult& r) {
    json out{{"balanced", r.balanced}, {"message", r.message}};
    if (r.vertex) out["vertex"] = qvec_to_json(*r.vertex);
    if (!r.residual.empty()) out["residual"] = qvec_to_json(r.residual);
    return out;
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("ParseError", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::exception& e) {
        throw IoError("ParseError", path + ": " + e.what());
    }
}

}  // namespace trop
