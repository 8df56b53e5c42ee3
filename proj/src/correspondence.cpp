#include "trop/correspondence.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace trop {

namespace {

Q four_pow(int q) { return Q(mpz_class(1) << (2 * q)); }

std::string mask_list(Mask m) {
    std::string s = "{";
    bool first = true;
    for (int i : mask_elements(m)) {
        s += (first ? "" : ",") + std::to_string(i + 1);
        first = false;
    }
    return s + "}";
}

// Sign of sorting the concatenation A then B, both increasing.
int merge_sign(Mask a, Mask b) {
    int inv = 0;
    for (int x : mask_elements(a))
        for (int y : mask_elements(b))
            if (x > y) ++inv;
    return inv % 2 ? -1 : 1;
}

LagerbergCurrent as_lagerberg(const InvariantComplexCurrent& s) {
    LagerbergCurrent t(s.U, s.q);
    t.co = s.shadow;
    return t;
}

void validate_kernel(const InvariantComplexCurrent& s) {
    for (auto& k : s.kernel) {
        if (k.I != k.J || popcount(k.I) != s.q) throw CurrentError("InvalidShadow", "kernel atom needs I = J with |I| = q");
        if ((k.pt.infinite & k.I) == 0) throw CurrentError("InvalidShadow", "kernel atom is not on E^{I∪J}");
        if (!s.U.contains(k.pt)) throw CurrentError("InvalidShadow", "kernel atom outside U");
    }
}

std::string piece_key(const Density& d) {
    std::ostringstream os;
    os << "D" << d.stratum << "|";
    for (auto& row : d.A)
        for (auto& x : row) os << x << ",";
    os << "|";
    for (auto& x : d.b) os << x << ",";
    os << "|";
    for (std::size_t r = 0; r < d.poly.G.size(); ++r) {
        for (auto& x : d.poly.G[r]) os << x << ",";
        os << "<=" << d.poly.h[r] << ";";
    }
    return os.str();
}

std::string point_key(const ChartPoint& p) {
    std::ostringstream os;
    os << "P" << p.infinite << "|";
    for (auto& x : p.u) os << x << ",";
    return os.str();
}

std::set<std::string> support_descriptors(const std::map<IndexPair, PieceMeasure>& co) {
    std::set<std::string> out;
    for (auto& [k, m0] : co) {
        PieceMeasure m = m0;
        m.normalize();
        for (auto& a : m.atoms) out.insert(point_key(a.pt));
        for (auto& a : m.derivative_atoms) out.insert(point_key(a.pt));
        for (auto& d : m.densities) out.insert(piece_key(d));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------- the current

PieceMeasure InvariantComplexCurrent::shadow_of(Mask I, Mask J) const {
    auto it = shadow.find({I, J});
    return it == shadow.end() ? PieceMeasure(n) : it->second;
}

void InvariantComplexCurrent::add(Mask I, Mask J, const PieceMeasure& m) {
    if (popcount(I) != q || popcount(J) != q) throw CurrentError("InvalidInput", "shadow index has wrong size");
    if (m.is_zero()) return;
    auto [it, fresh] = shadow.try_emplace({I, J}, m);
    if (!fresh) it->second += m;
}

void InvariantComplexCurrent::normalize() {
    for (auto it = shadow.begin(); it != shadow.end();) {
        it->second.normalize();
        if (it->second.is_zero()) it = shadow.erase(it);
        else ++it;
    }
}

bool InvariantComplexCurrent::is_zero() const {
    return kernel.empty() && std::all_of(shadow.begin(), shadow.end(), [](const auto& kv) { return kv.second.is_zero(); });
}

bool same_shadows(const InvariantComplexCurrent& a, const InvariantComplexCurrent& b) {
    if (a.n != b.n || a.q != b.q || a.kernel.size() != b.kernel.size()) return false;
    return same_current(as_lagerberg(a), as_lagerberg(b));
}

void validate_shadow(const InvariantComplexCurrent& s) {
    try {
        validate(as_lagerberg(s));
    } catch (const CurrentError& e) {
        throw CurrentError("InvalidShadow", e.what());
    }
    validate_kernel(s);
    for (auto& [k, mu] : s.shadow) {
        if (!mu.is_measure()) throw CurrentError("InvalidShadow", "shadow " + mask_list(k.first) + mask_list(k.second) + " is not a measure");
        QVec extra(static_cast<std::size_t>(s.n), Q(0));
        for (int i : mask_elements(k.first)) extra[static_cast<std::size_t>(i)] -= 1;
        for (int j : mask_elements(k.second)) extra[static_cast<std::size_t>(j)] -= 1;
        auto r = local_finiteness(total_variation(mu), s.U.infinite, 0, extra, s.U.excluded);
        if (!r.ok)
            throw CurrentError("InvalidShadow", "weighted shadow " + mask_list(k.first) + mask_list(k.second) +
                                                    " has no image measure near stratum " + mask_list(r.toward) + ": " + r.message);
    }
}

// ---------------------------------------------------------------- evaluation

std::complex<double> evaluate(const InvariantComplexCurrent& s, const InvariantComplexFormField& g0, double tol) {
    std::complex<double> total = 0;
    if (g0.coeffs.empty() && g0.monomial_part.empty()) return total;
    auto bd = g0.bidegree();
    if (bd.first != s.q || bd.second != s.q) throw CurrentError("InvalidInput", "test field has the wrong bidegree");
    InvariantComplexFormField g = average_over_S(g0);
    double pi_factor = std::pow(std::sqrt(std::numbers::pi), g.sqrt_pi_power);
    int sign = cocoef_sign(s.q);
    double per = tol / std::max<std::size_t>(1, g.coeffs.size());
    for (auto& [m, c] : g.coeffs) {
        Mask I = mono_i(m, s.n), J = mono_j(m, s.n);
        auto it = s.shadow.find({I, J});
        if (it != s.shadow.end() && !it->second.is_zero()) {
            try {
                double re = c.re.is_zero() ? 0.0 : integrate_against(c.re, it->second, per).value;
                double im = c.im.is_zero() ? 0.0 : integrate_against(c.im, it->second, per).value;
                total += sign * pi_factor * std::complex<double>(re, im);
            } catch (const MeasureError& e) {
                throw CurrentError(e.kind, e.what());
            }
        }
        for (auto& k : s.kernel) {
            if (k.I != I || k.J != J) continue;
            // Coefficient against i^q dz_I∧dz̄_I: multiply by |z_I|^{-2} = e^{2u_I}.
            QVec ell(static_cast<std::size_t>(s.n), Q(0));
            for (int i : mask_elements(I)) ell[static_cast<std::size_t>(i)] = 2;
            auto lift_to = [&](const CoefficientFn& f) {
                CoefficientFn h = f * CoefficientFn::exp_linear(s.n, ell);
                try {
                    for (int i : mask_elements(k.pt.infinite)) h = h.limit_at_infinity(i);
                } catch (const FieldError& e) {
                    throw CurrentError("SupportEscapesU", std::string("test field is not smooth at the kernel atom: ") + e.what());
                }
                std::vector<double> u(k.pt.u.size());
                for (std::size_t i = 0; i < u.size(); ++i) u[i] = k.pt.u[i].get_d();
                return h.eval(u, k.pt.infinite);
            };
            total += sign * pi_factor * k.w.get_d() * std::complex<double>(lift_to(c.re), lift_to(c.im));
        }
    }
    return total;
}

// ---------------------------------------------------------------- push-forward and lift

LagerbergCurrent push_forward(const InvariantComplexCurrent& s) {
    validate_shadow(s);
    LagerbergCurrent t(s.U, s.q);
    t.label = s.label.empty() ? "push-forward" : "push-forward of " + s.label;
    Q c = Q(1) / four_pow(s.q);
    for (auto& [k, m] : s.shadow) t.add(k.first, k.second, scaled(m, c, -s.q));
    t.normalize();
    return t;
}

InvariantComplexCurrent lift(const LagerbergCurrent& t) {
    auto pc = positivity_check(t);
    if (pc.answer != Answer::Yes) throw CurrentError("NotPositive", pc.reason);
    auto cf = c_finite_test(t);
    if (cf.answer != Answer::Yes) throw CurrentError("NotCFinite", cf.message);
    InvariantComplexCurrent s(t.U, t.q);
    s.label = t.label.empty() ? "lift" : "lift of " + t.label;
    Q c = four_pow(t.q);
    for (auto& [stratum, part] : canonical_decomposition(t, false))
        for (auto& [k, m] : part.co) s.add(k.first, k.second, scaled(m, c, t.q));
    s.normalize();
    validate_shadow(s);
    return s;
}

RoundTripReport round_trip_verify(const std::vector<LagerbergCurrent>& suite) {
    RoundTripReport rep;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto& t = suite[i];
        RoundTripEntry e;
        e.label = t.label.empty() ? "current " + std::to_string(i) : t.label;
        try {
            auto s = lift(t);
            e.exact = same_current(push_forward(s), t);
            // A second piece assembly of the same current: the sum of its stratum parts.
            LagerbergCurrent other(t.U, t.q);
            for (auto& [stratum, part] : canonical_decomposition(t, false)) other = other + part;
            e.injective = same_current(other, t) && same_shadows(lift(other), s);
            e.message = e.exact ? "push_forward(lift(T)) = T on piece data" : "round trip changed the piece data";
            if (!e.injective) e.message += "; lifts of equal currents differ";
        } catch (const CurrentError& err) {
            e.message = err.what();
        }
        rep.ok = rep.ok && e.exact && e.injective;
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

// ---------------------------------------------------------------- positivity

ComplexPositivity complex_positivity_check(const InvariantComplexCurrent& s0, int samples, std::uint64_t seed, double tol) {
    ComplexPositivity res;
    if (!s0.kernel.empty()) {
        res.reason = "kernel atoms are invisible to shadows";
        return res;
    }
    InvariantComplexCurrent s = s0;
    s.normalize();
    for (auto& [k, mu] : s.shadow) {
        if (!mu.is_measure()) {
            res.answer = Answer::No;
            res.reason = "shadow " + mask_list(k.first) + mask_list(k.second) + " is not a measure";
            return res;
        }
        if (!same_pieces(mu, s.shadow_of(k.second, k.first))) {
            res.answer = Answer::No;
            res.asymmetric = k;
            res.reason = "shadow is not Hermitian at I=" + mask_list(k.first) + ", J=" + mask_list(k.second);
            return res;
        }
    }
    static const std::vector<Q> grid{Q(-2), Q(-1), Q(-1, 2), Q(1, 2), Q(1), Q(2)};
    std::string unknown;
    for (auto& g : coefficient_groups(s.shadow)) {
        const auto& M = g.matrix;
        std::size_t m = M.size();
        ChartPoint x = group_point(g, s.n);
        // Hermitian matrix of weighted complex co-coefficients at x.
        Eigen::MatrixXd H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        std::vector<double> t;
        double dens = 1.0;
        if (!g.atom) {
            auto& d = g.density_rep;
            // Piece parameters of x, recovered from the free axes through the frame.
            Mat<Q> sys;
            QVec rhs;
            for (std::size_t i = 0; i < d.A.size(); ++i) {
                if ((d.stratum >> i) & 1) continue;
                sys.push_back(d.A[i]);
                rhs.push_back(x.u[i] - d.b[i]);
            }
            auto sol = exact_solve(sys, rhs);
            if (sol)
                for (auto& v : *sol) t.push_back(v.get_d());
            else t.assign(static_cast<std::size_t>(d.k()), 0.0);
            dens = d.w.value(t) * std::pow(std::numbers::pi, d.pi_power);
        } else {
            dens = std::pow(std::numbers::pi, g.atom_rep.pi_power);
        }
        std::vector<double> scale(m);
        for (std::size_t a = 0; a < m; ++a) {
            double e = 0;
            for (int i : mask_elements(g.indices[a])) e -= x.u[static_cast<std::size_t>(i)].get_d();
            scale[a] = std::exp(e);
        }
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = dens * scale[a] * scale[b] * M[a][b].get_d();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
        double norm = std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
        double rel = es.eigenvalues().minCoeff() / norm;
        res.min_eigenvalue = std::min(res.min_eigenvalue, rel);

        std::optional<Estimate30Witness> est;
        for (std::size_t a = 0; a < m && !est; ++a)
            for (std::size_t b = 0; b < m && !est; ++b) {
                if (a == b) continue;
                for (auto& la : grid)
                    for (auto& lb : grid)
                        if (!est && la * lb * qabs(M[a][b]) * 2 > la * la * M[a][a] + lb * lb * M[b][b])
                            est = Estimate30Witness{g.indices[a], g.indices[b], la, lb, g.atom ? "atom group" : "density group"};
            }
        bool psd = exact_ldl(M).psd;
        if (psd && !est && rel >= -1e-12) continue;
        if (psd) {
            unknown = "exact PSD matrix disagrees with a numerical or grid check";
            continue;
        }
        if (!g.isolated) {
            unknown = "non-PSD density group overlaps differently framed pieces";
            continue;
        }
        res.answer = Answer::No;
        res.estimate = est;
        res.where = x;
        res.reason = "weighted co-coefficient matrix is not positive semidefinite";
        if (est) res.reason += "; the estimate 2|λ_Iλ_J||S^{IJ}| <= λ_I^2 S^{II} + λ_J^2 S^{JJ} fails";
        return res;
    }
    Rng rng(seed);
    for (int k = 0; k < samples; ++k) {
        auto alpha = random_positive_test_field(rng, s.U, s.q);
        auto g = trop_pullback_field(alpha);
        try {
            auto v = evaluate(s, g, 1e-10);
            if (v.real() < -tol || std::abs(v.imag()) > tol * std::max(1.0, std::abs(v.real()))) {
                res.answer = Answer::No;
                res.witness_form = g;
                res.witness_value = v.real();
                res.reason = "negative or non-real value on a positive invariant test field";
                return res;
            }
        } catch (const CurrentError& e) {
            unknown = e.what();
        }
    }
    if (!unknown.empty()) {
        res.reason = unknown;
        return res;
    }
    res.answer = Answer::Yes;
    res.reason = "Hermitian, positive semidefinite weighted co-coefficients, nonnegative on sampled positive fields";
    return res;
}

// ---------------------------------------------------------------- compatibility

std::vector<CompatCheck> compat_checks(const InvariantComplexCurrent& s) {
    std::vector<CompatCheck> out;
    LagerbergCurrent t;
    try {
        t = push_forward(s);
    } catch (const CurrentError& e) {
        out.push_back({"push-forward", Answer::No, e.what()});
        return out;
    }

    CompatCheck dec{"decomposition", Answer::Unknown, ""};
    try {
        LagerbergCurrent sum(s.U, s.q);
        InvariantComplexCurrent resum(s.U, s.q);
        int parts = 0;
        Mask inf = s.U.infinite;
        for (Mask st = inf;; st = (st - 1) & inf) {
            if (s.U.has_stratum(st)) {
                InvariantComplexCurrent part(s.U, s.q);
                for (auto& [k, m] : s.shadow) part.add(k.first, k.second, restrict_to_stratum(m, st));
                for (auto& [k, m] : part.shadow) resum.add(k.first, k.second, m);
                sum = sum + push_forward(part);
                ++parts;
            }
            if (st == 0) break;
        }
        InvariantComplexCurrent plain = s;
        plain.kernel.clear();
        bool ok = same_current(sum, t) && same_shadows(resum, plain);
        dec.passed = ok ? Answer::Yes : Answer::No;
        dec.message = std::to_string(parts) + " strata; " +
                      (ok ? "trop_* commutes with the stratum decomposition" : "stratum parts do not resum");
    } catch (const std::exception& e) {
        dec.message = e.what();
    }
    out.push_back(dec);

    CompatCheck sup{"support", Answer::Unknown, ""};
    if (!s.kernel.empty()) {
        sup.message = "kernel atoms lie outside every shadow";
    } else {
        auto ds = support_descriptors(s.shadow);
        auto dt = support_descriptors(t.co);
        sup.passed = ds == dt ? Answer::Yes : Answer::No;
        sup.message = std::to_string(ds.size()) + " support pieces; " +
                      (ds == dt ? "trop^{-1}(supp trop_* S) = supp S" : "supports differ");
    }
    out.push_back(sup);

    if (s.q == 0) {
        CompatCheck top{"top degree", Answer::Unknown, ""};
        bool measure_equal = same_pieces(t.cocoef(0, 0), s.shadow_of(0, 0));
        try {
            bool back = same_shadows(lift(t), s);
            top.passed = measure_equal && back ? Answer::Yes : Answer::No;
            top.message = measure_equal && back ? "trop_* is the identity on top-degree shadows and lift inverts it"
                                                : "top-degree measures do not correspond";
        } catch (const CurrentError& e) {
            top.passed = measure_equal ? Answer::Unknown : Answer::No;
            top.message = e.what();
        }
        out.push_back(top);
    }
    return out;
}

// ---------------------------------------------------------------- products and exemplars

InvariantComplexCurrent wedge_with_form(const LagerbergFormField& beta, const InvariantComplexCurrent& s) {
    if (!s.kernel.empty()) throw CurrentError("Unsupported", "product with kernel atoms");
    InvariantComplexCurrent out(s.U, s.q);
    if (beta.is_zero()) return out;
    auto [p1, p1b] = beta.bidegree();
    if (p1 != p1b || p1 > s.q) throw CurrentError("InvalidInput", "form has the wrong bidegree");
    int q2 = s.q - p1;
    out = InvariantComplexCurrent(s.U, q2);
    out.label = s.label;
    auto g = trop_pullback_field(beta);
    int n = s.n;
    Q outer(cocoef_sign(q2) * cocoef_sign(s.q));
    for (Mask K : subsets_of_size(n, q2))
        for (Mask L : subsets_of_size(n, q2))
            for (auto& [m, c] : g.coeffs) {
                Mask M = mono_i(m, n), N = mono_j(m, n);
                if ((M & K) || (N & L)) continue;
                if (!c.im.is_zero()) throw CurrentError("Unsupported", "form pulls back with an imaginary part");
                auto it = s.shadow.find({M | K, N | L});
                if (it == s.shadow.end()) continue;
                // i^{p1} dz_M∧dz̄_N ∧ i^{q2} dz_K∧dz̄_L = i^q ε dz_{M∪K}∧dz̄_{N∪L}.
                int eps = ((popcount(N) * popcount(K)) % 2 ? -1 : 1) * merge_sign(M, K) * merge_sign(N, L);
                out.add(K, L, scaled(modulated(it->second, c.re), outer * eps, g.sqrt_pi_power / 2));
            }
    out.normalize();
    return out;
}

InvariantComplexCurrent haar_shadow(const PieceMeasure& mu, const OpenSet& U) {
    InvariantComplexCurrent s(U, 0);
    s.label = "top-degree shadow of a measure";
    s.add(0, 0, mu);
    return s;
}

InvariantComplexCurrent origin_point_mass_p1() {
    InvariantComplexCurrent s(OpenSet::whole(1, 1), 1);
    s.label = "point mass at the origin of P^1";
    s.kernel.push_back(KernelAtom{ChartPoint{1, {Q(0)}}, 1, 1, Q(1)});
    return s;
}

std::string describe(const InvariantComplexCurrent& s) {
    std::ostringstream os;
    os << "invariant (" << s.p() << "," << s.p() << ") current on trop^{-1}(U), n=" << s.n;
    if (!s.label.empty()) os << " [" << s.label << "]";
    os << ", " << s.shadow.size() << " shadows";
    if (!s.kernel.empty()) os << ", " << s.kernel.size() << " kernel atoms";
    return os.str();
}

}  // namespace trop
