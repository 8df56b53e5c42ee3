#include "trop/currents.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace trop {

namespace {

Mask all_axes(int n) { return (Mask(1) << n) - 1; }

bool is_submask(Mask a, Mask b) { return (a & ~b) == 0; }

Mat<Q> embedding(int n, Mask stratum) {
    int k = n - popcount(stratum);
    Mat<Q> A = zero_mat<Q>(static_cast<std::size_t>(n), static_cast<std::size_t>(k));
    std::size_t col = 0;
    for (int i = 0; i < n; ++i)
        if (!((stratum >> i) & 1)) A[static_cast<std::size_t>(i)][col++] = 1;
    return A;
}

Q dotq(const QVec& a, const QVec& b) {
    Q s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// max c.t over the polyhedron; nullopt when unbounded above.
std::optional<Q> lp_max(const Polyhedron& p, const QVec& c) {
    std::size_t k = static_cast<std::size_t>(p.dim), m = p.G.size();
    if (k == 0) return Q(0);
    if (m == 0) {
        if (std::all_of(c.begin(), c.end(), [](const Q& x) { return x == 0; })) return Q(0);
        return std::nullopt;
    }
    Mat<Q> a = zero_mat<Q>(m, 2 * k + m);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            a[r][j] = p.G[r][j];
            a[r][k + j] = -p.G[r][j];
        }
        a[r][2 * k + r] = 1;
    }
    QVec obj(2 * k + m, Q(0));
    for (std::size_t j = 0; j < k; ++j) {
        obj[j] = c[j];
        obj[k + j] = -c[j];
    }
    auto res = lp_solve<Q>(a, p.h, obj, Q(0));
    if (res.status != LpStatus::Optimal) return std::nullopt;
    return res.objective;
}

// A point of the polyhedron with maximal slack (capped at one) and the slack.
std::pair<QVec, Q> interior_point(const Polyhedron& p) {
    std::size_t k = static_cast<std::size_t>(p.dim), m = p.G.size();
    if (m == 0) return {QVec(k, Q(0)), Q(1)};
    // Variables t+, t-, s, slacks; rows G t + s |g| + slack = h and s + slack' = 1.
    std::size_t nv = 2 * k + 1 + m + 1;
    Mat<Q> a = zero_mat<Q>(m + 1, nv);
    QVec rhs(m + 1);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            a[r][j] = p.G[r][j];
            a[r][k + j] = -p.G[r][j];
        }
        a[r][2 * k] = 1;
        a[r][2 * k + 1 + r] = 1;
        rhs[r] = p.h[r];
    }
    a[m][2 * k] = 1;
    a[m][nv - 1] = 1;
    rhs[m] = 1;
    QVec obj(nv, Q(0));
    obj[2 * k] = 1;
    auto res = lp_solve<Q>(a, rhs, obj, Q(0));
    if (res.status != LpStatus::Optimal) return {QVec(k, Q(0)), Q(-1)};
    QVec t(k);
    for (std::size_t j = 0; j < k; ++j) t[j] = res.x[j] - res.x[k + j];
    return {t, res.objective};
}

CurrentError from_measure(const MeasureError& e) { return CurrentError(e.kind, e.what()); }

Q rand_between(Rng& rng, const Q& lo, const Q& hi, long steps = 8) {
    return lo + (hi - lo) * qfrac(rng.uniform_int(0, steps), steps);
}

Q q_of(double x) {
    Q r(static_cast<long>(std::llround(x * 1024)), 1024);
    r.canonicalize();
    return r;
}

// Finite window (wl, wh) inside U along an axis for placing test functions.
std::pair<Q, Q> window(const OpenSet& U, std::size_t i) {
    Q wl = U.lo[i] ? Q(*U.lo[i] + Q(1, 2)) : Q(-3);
    Q wh = U.hi[i] ? Q(*U.hi[i] - Q(1, 2)) : Q(wl + 6);
    if (!U.lo[i] && wh <= wl) wl = wh - 6;
    if (wh <= wl) {
        Q a = *U.lo[i], b = *U.hi[i];
        wl = a + (b - a) / 4;
        wh = b - (b - a) / 4;
    }
    return {wl, wh};
}

CoefficientFn random_bump_factor(Rng& rng, int n, int axis, const Q& wl, const Q& wh) {
    Q a = rand_between(rng, wl, wl + (wh - wl) / 2);
    Q b = rand_between(rng, a + (wh - a) / 2, wh);
    if (b <= a) b = wh;
    return CoefficientFn::bump(n, axis, a, b);
}

// Exact value of a coefficient function without factors and without exponential growth at u.
std::optional<Q> exact_value(const CoefficientFn& f, const QVec& u) {
    Q s = 0;
    for (auto& t : f.terms()) {
        if (!t.factors.empty()) return std::nullopt;
        Q e = 0;
        for (std::size_t i = 0; i < t.ell.size(); ++i) e += t.ell[i] * u[i];
        if (e != 0) return std::nullopt;
        Q m = t.c;
        for (std::size_t i = 0; i < t.a.size(); ++i)
            for (int k = 0; k < t.a[i]; ++k) m *= u[i];
        s += m;
    }
    return s;
}

CoefficientFn restrict_fn(CoefficientFn f, Mask stratum) {
    try {
        for (int i : mask_elements(stratum)) f = f.limit_at_infinity(i);
    } catch (const FieldError& e) {
        throw CurrentError("FamilyEscape", e.what());
    }
    return f;
}

// μ multiplied by the function c.
}  // namespace

PieceMeasure modulated(const PieceMeasure& mu, const CoefficientFn& c) {
    PieceMeasure out(mu.n);
    bool constant = c.terms().size() == 1 && c.terms()[0].factors.empty() &&
                    std::all_of(c.terms()[0].a.begin(), c.terms()[0].a.end(), [](int a) { return a == 0; }) &&
                    std::all_of(c.terms()[0].ell.begin(), c.terms()[0].ell.end(), [](const Q& l) { return l == 0; });
    if (c.is_zero()) return out;
    if (constant) return scaled(mu, c.terms()[0].c);
    for (auto& a : mu.atoms) {
        auto v = exact_value(restrict_fn(c, a.pt.infinite), a.pt.u);
        if (!v) throw CurrentError("FamilyEscape", "coefficient has no exact value at an atom");
        if (*v != 0) out.atoms.push_back({a.pt, a.w * *v, a.pi_power});
    }
    for (auto& da : mu.derivative_atoms) {
        CoefficientFn g = restrict_fn(c, da.pt.infinite);
        auto v = exact_value(g, da.pt.u);
        if (!v) throw CurrentError("FamilyEscape", "coefficient has no exact value at a derivative atom");
        Q dv = 0;
        for (std::size_t j = 0; j < da.dir.size(); ++j) {
            if (da.dir[j] == 0) continue;
            auto dj = exact_value(g.derivative(static_cast<int>(j)), da.pt.u);
            if (!dj) throw CurrentError("FamilyEscape", "coefficient derivative has no exact value");
            dv += da.dir[j] * *dj;
        }
        if (*v != 0) out.derivative_atoms.push_back({da.pt, da.dir, da.w * *v});
        if (dv != 0) out.atoms.push_back({da.pt, -da.w * dv, 0});
    }
    for (auto& d : mu.densities) {
        CoefficientFn g = restrict_fn(c, d.stratum);
        std::size_t k = static_cast<std::size_t>(d.k());
        for (auto& t : g.terms()) {
            if (!t.factors.empty()) throw CurrentError("FamilyEscape", "bump or step factor times a density piece");
            Poly P(t.c);
            Weight w = d.w;
            for (std::size_t i = 0; i < t.a.size(); ++i) {
                if ((d.stratum >> i) & 1) continue;
                Poly ui(d.b[i]);
                for (std::size_t j = 0; j < k; ++j)
                    if (d.A[i][j] != 0) ui += Poly(d.A[i][j]) * Poly::var(static_cast<int>(j));
                for (int e = 0; e < t.a[i]; ++e) P *= ui;
                for (std::size_t j = 0; j < k; ++j) w.lin[j] += t.ell[i] * d.A[i][j];
                w.cst += t.ell[i] * d.b[i];
            }
            w.pol = w.pol * P;
            if (w.pol.is_zero()) continue;
            Q signed_coef = d.coef * d.sign;
            try {
                out.densities.push_back(make_density(mu.n, d.stratum, d.A, d.b, d.poly, w, signed_coef, d.pi_power));
            } catch (const MeasureError&) {
                w.pol = -w.pol;
                try {
                    out.densities.push_back(make_density(mu.n, d.stratum, d.A, d.b, d.poly, w, -signed_coef, d.pi_power));
                } catch (const MeasureError&) {
                    throw CurrentError("FamilyEscape", "modulated density changes sign on its piece");
                }
            }
        }
    }
    return out;
}

namespace {

std::string mask_str(Mask m) {
    std::string s = "{";
    bool first = true;
    for (int i : mask_elements(m)) {
        s += (first ? "" : ",") + std::to_string(i + 1);
        first = false;
    }
    return s + "}";
}

}  // namespace

// ---------------------------------------------------------------- open sets

OpenSet OpenSet::whole(int n, Mask infinite) {
    OpenSet u;
    u.n = n;
    u.lo.assign(static_cast<std::size_t>(n), std::nullopt);
    u.hi.assign(static_cast<std::size_t>(n), std::nullopt);
    u.infinite = infinite;
    return u;
}

bool OpenSet::has_stratum(Mask s) const {
    if (!is_submask(s, infinite)) return false;
    return std::none_of(excluded.begin(), excluded.end(), [&](Mask e) { return is_submask(e, s); });
}

bool OpenSet::contains(const ChartPoint& p) const {
    if (!has_stratum(p.infinite)) return false;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        if ((p.infinite >> i) & 1) continue;
        if (lo[i] && p.u[i] <= *lo[i]) return false;
        if (hi[i] && p.u[i] >= *hi[i]) return false;
    }
    return true;
}

void OpenSet::validate() const {
    if (lo.size() != static_cast<std::size_t>(n) || hi.size() != static_cast<std::size_t>(n))
        throw CurrentError("InvalidInput", "open set bounds have wrong length");
    for (int i : mask_elements(infinite))
        if (hi[static_cast<std::size_t>(i)]) throw CurrentError("InvalidInput", "bounded axis cannot reach infinity");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (lo[i] && hi[i] && *lo[i] >= *hi[i]) throw CurrentError("InvalidInput", "empty open set");
}

int cocoef_sign(int q) { return ((q * (q - 1) / 2) & 1) ? -1 : 1; }

// ---------------------------------------------------------------- weighted complexes

Cell segment_cell(const QVec& from, const QVec& to, long weight) {
    QVec d(from.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = to[i] - from[i];
    mpz_class L = 1;
    for (auto& x : d) L = lcm(L, mpz_class(x.get_den()));
    mpz_class g = 0;
    std::vector<mpz_class> v(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        v[i] = mpz_class(d[i] * Q(L));
        g = gcd(g, v[i]);
    }
    if (g == 0) throw CurrentError("InvalidInput", "degenerate segment");
    Cell c;
    c.A = zero_mat<Q>(d.size(), 1);
    for (std::size_t i = 0; i < d.size(); ++i) c.A[i][0] = Q(v[i] / g);
    c.b = from;
    c.poly = Polyhedron::box({{Q(0), Q(g) / Q(L)}});
    c.weight = weight;
    return c;
}

Cell ray_cell(const QVec& origin, const std::vector<long>& dir, long weight) {
    long g = 0;
    for (long x : dir) g = std::gcd(g, x);
    if (g == 0) throw CurrentError("InvalidInput", "zero ray direction");
    Cell c;
    c.A = zero_mat<Q>(dir.size(), 1);
    for (std::size_t i = 0; i < dir.size(); ++i) c.A[i][0] = Q(dir[i] / g);
    c.b = origin;
    c.poly = Polyhedron::box({{Q(0), std::nullopt}});
    c.weight = weight;
    return c;
}

void validate_complex(const WeightedComplex& c) {
    for (auto& cell : c.cells) {
        if (cell.A.size() != static_cast<std::size_t>(c.n) || cell.b.size() != static_cast<std::size_t>(c.n) ||
            cell.poly.dim != c.dim)
            throw CurrentError("MixedDimension", "cell does not match the complex dimension");
        for (auto& row : cell.A) {
            if (row.size() != static_cast<std::size_t>(c.dim)) throw CurrentError("MixedDimension", "cell has wrong dimension");
            for (auto& x : row)
                if (x.get_den() != 1) throw CurrentError("InvalidInput", "cell frame is not integral");
        }
        if (c.dim == 0) continue;
        // Saturation: the maximal minors have gcd one.
        mpz_class g = 0;
        for (Mask rows : subsets_of_size(c.n, c.dim)) {
            Mat<Q> sub;
            for (int i : mask_elements(rows)) sub.push_back(cell.A[static_cast<std::size_t>(i)]);
            g = gcd(g, mpz_class(exact_det(sub)));
        }
        if (g != 1) throw CurrentError("InvalidInput", "cell frame is not a lattice basis of its span");
        if (cell.poly.is_empty()) throw CurrentError("InvalidInput", "empty cell");
    }
}

// ---------------------------------------------------------------- currents

PieceMeasure LagerbergCurrent::cocoef(Mask I, Mask J) const {
    auto it = co.find({I, J});
    return it == co.end() ? PieceMeasure(n) : it->second;
}

void LagerbergCurrent::add(Mask I, Mask J, const PieceMeasure& m) {
    if (popcount(I) != q || popcount(J) != q) throw CurrentError("InvalidInput", "co-coefficient index has wrong size");
    if (m.is_zero()) return;
    auto [it, fresh] = co.try_emplace({I, J}, m);
    if (!fresh) it->second += m;
}

void LagerbergCurrent::normalize() {
    for (auto it = co.begin(); it != co.end();) {
        it->second.normalize();
        if (it->second.is_zero()) it = co.erase(it);
        else ++it;
    }
}

bool LagerbergCurrent::is_zero() const {
    return !has_evaluator() && std::all_of(co.begin(), co.end(), [](const auto& kv) { return kv.second.is_zero(); });
}

bool same_current(const LagerbergCurrent& a, const LagerbergCurrent& b) {
    if (a.n != b.n || a.q != b.q || a.has_evaluator() || b.has_evaluator()) return false;
    LagerbergCurrent x = a, y = b;
    x.normalize();
    y.normalize();
    if (x.co.size() != y.co.size()) return false;
    for (auto& [k, m] : x.co) {
        auto it = y.co.find(k);
        if (it == y.co.end() || !same_pieces(m, it->second)) return false;
    }
    return true;
}

LagerbergCurrent operator+(const LagerbergCurrent& a, const LagerbergCurrent& b) {
    if (a.n != b.n || a.q != b.q) throw CurrentError("InvalidInput", "currents of different bidegree");
    if (a.has_evaluator() || b.has_evaluator()) throw CurrentError("Unsupported", "sum with an evaluator current");
    LagerbergCurrent out = a;
    out.complex.reset();
    for (auto& [k, m] : b.co) out.add(k.first, k.second, m);
    return out;
}

LagerbergCurrent scaled(const LagerbergCurrent& t, const Q& c, int pi_delta) {
    if (t.has_evaluator()) throw CurrentError("Unsupported", "scaling an evaluator current");
    LagerbergCurrent out = t;
    out.complex.reset();
    for (auto& [k, m] : out.co) m = scaled(m, c, pi_delta);
    out.normalize();
    return out;
}

void validate(const LagerbergCurrent& t) {
    t.U.validate();
    if (t.q < 0 || t.q > t.n) throw CurrentError("InvalidInput", "bidegree out of range");
    for (auto& [k, mu] : t.co) {
        auto [I, J] = k;
        if (popcount(I) != t.q || popcount(J) != t.q) throw CurrentError("InvalidInput", "co-coefficient index has wrong size");
        Mask E = I | J;
        std::string where = "co-coefficient " + mask_str(I) + mask_str(J);
        auto check_stratum = [&](Mask s) {
            if (s & E) throw CurrentError("InvalidInput", where + " has mass on E^{I∪J}");
            if (!t.U.has_stratum(s)) throw CurrentError("InvalidInput", where + " has mass outside U");
        };
        for (auto& a : mu.atoms) {
            check_stratum(a.pt.infinite);
            if (!t.U.contains(a.pt)) throw CurrentError("InvalidInput", where + " has an atom outside U");
        }
        for (auto& a : mu.derivative_atoms) {
            check_stratum(a.pt.infinite);
            if (!t.U.contains(a.pt)) throw CurrentError("InvalidInput", where + " has a derivative atom outside U");
        }
        for (auto& d : mu.densities) {
            check_stratum(d.stratum);
            for (std::size_t i = 0; i < static_cast<std::size_t>(t.n); ++i) {
                if ((d.stratum >> i) & 1) continue;
                if (t.U.hi[i]) {
                    auto mx = lp_max(d.poly, d.A[i]);
                    if (!mx || *mx + d.b[i] > *t.U.hi[i]) throw CurrentError("InvalidInput", where + " leaves U");
                }
                if (t.U.lo[i]) {
                    QVec neg = d.A[i];
                    for (auto& x : neg) x = -x;
                    auto mx = lp_max(d.poly, neg);
                    if (!mx || d.b[i] - *mx < *t.U.lo[i]) throw CurrentError("InvalidInput", where + " leaves U");
                }
            }
        }
        if (!mu.is_measure()) continue;
        auto r = local_finiteness(total_variation(mu), t.U.infinite, E, std::nullopt, t.U.excluded);
        if (!r.ok) throw CurrentError("NotLocallyFinite", where + ": " + r.message);
    }
}

// ---------------------------------------------------------------- evaluation

namespace {

void check_support(const LagerbergCurrent& t, const LagerbergFormField& alpha) {
    for (auto& [m, f] : alpha.coeffs) {
        auto box = f.support_box();
        Mask reach = 0;
        for (std::size_t i = 0; i < box.size(); ++i) {
            auto [lo, hi] = box[i];
            if (lo >= hi) goto next;  // zero coefficient
            if (std::isinf(lo)) throw CurrentError("SupportEscapesU", "support is not bounded below on axis " + std::to_string(i + 1));
            if (t.U.lo[i] && lo <= t.U.lo[i]->get_d()) throw CurrentError("SupportEscapesU", "support meets the lower boundary of U");
            if (std::isinf(hi)) {
                if (!((t.U.infinite >> i) & 1)) throw CurrentError("SupportEscapesU", "support is not bounded above on axis " + std::to_string(i + 1));
                reach |= Mask(1) << i;
            } else if (t.U.hi[i] && hi >= t.U.hi[i]->get_d()) {
                throw CurrentError("SupportEscapesU", "support meets the upper boundary of U");
            }
        }
        for (Mask e : t.U.excluded)
            if (is_submask(e, reach)) throw CurrentError("SupportEscapesU", "support reaches an excluded stratum");
    next:;
    }
}

// Per-coefficient contributions σ_q T^{IJ}(f_IJ).
std::vector<IntegrationResult> contributions(const LagerbergCurrent& t, const LagerbergFormField& alpha, double tol) {
    std::vector<IntegrationResult> out;
    int s = cocoef_sign(t.q);
    double per = tol / std::max<std::size_t>(1, alpha.coeffs.size());
    for (auto& [m, f] : alpha.coeffs) {
        auto it = t.co.find({mono_i(m, t.n), mono_j(m, t.n)});
        if (it == t.co.end() || it->second.is_zero()) continue;
        try {
            auto r = integrate_against(f, it->second, per, true);
            r.value *= s;
            out.push_back(r);
        } catch (const MeasureError& e) {
            throw from_measure(e);
        }
    }
    return out;
}

// max(1, sqrt(Σ ∫ f_IJ^2 d|T^{IJ}|)), the size against which residuals are compared.
double field_scale(const LagerbergCurrent& t, const LagerbergFormField& alpha, double tol) {
    if (t.has_evaluator()) return 1.0;
    double s = 0;
    for (auto& [m, f] : alpha.coeffs) {
        auto it = t.co.find({mono_i(m, t.n), mono_j(m, t.n)});
        if (it == t.co.end() || it->second.is_zero() || !it->second.is_measure()) continue;
        try {
            s += integrate_against(f * f, total_variation(it->second), tol).value;
        } catch (const MeasureError&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return std::max(1.0, std::sqrt(std::max(0.0, s)));
}

}  // namespace

IntegrationResult evaluate_detail(const LagerbergCurrent& t, const LagerbergFormField& alpha, double tol) {
    IntegrationResult res;
    if (alpha.is_zero()) return res;
    if (alpha.n != t.n) throw CurrentError("InvalidInput", "test form lives in another dimension");
    auto bd = alpha.bidegree();
    if (bd.first != t.q || bd.second != t.q) throw CurrentError("InvalidInput", "test form has the wrong bidegree");
    check_support(t, alpha);
    if (t.has_evaluator()) {
        res.value = t.evaluator(alpha, tol);
        return res;
    }
    for (auto& r : contributions(t, alpha, tol)) {
        res.value += r.value;
        res.non_measure = res.non_measure || r.non_measure;
    }
    return res;
}

double evaluate(const LagerbergCurrent& t, const LagerbergFormField& alpha, double tol, bool check_compat) {
    if (check_compat) {
        auto rep = check_compatibility(alpha, 200);
        if (!rep.ok) throw CurrentError("CompatibilityViolation", rep.message);
    }
    return evaluate_detail(t, alpha, tol).value;
}

// ---------------------------------------------------------------- test fields

LagerbergFormField random_test_field(Rng& rng, const OpenSet& U, int p, int q, int terms) {
    int n = U.n;
    LagerbergFormField out(n, U.infinite);
    std::vector<Mono> monos;
    for (Mask I : subsets_of_size(n, p))
        for (Mask J : subsets_of_size(n, q)) monos.push_back(make_mono(I, J, n));
    std::vector<Mono> chosen;
    for (Mono m : monos)
        if (rng.uniform_int(0, 1)) chosen.push_back(m);
    if (chosen.empty()) chosen.push_back(monos[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(monos.size()) - 1))]);
    for (Mono m : chosen) {
        Mask touched = mono_i(m, n) | mono_j(m, n);
        CoefficientFn f(n);
        for (int k = 0; k < terms; ++k) {
            Mask reach = 0;
            for (int i : mask_elements(U.infinite & ~touched))
                if (!U.hi[static_cast<std::size_t>(i)] && rng.uniform_int(0, 2) == 0) reach |= Mask(1) << i;
            for (Mask e : U.excluded)
                while (reach && is_submask(e, reach)) reach &= ~(Mask(1) << std::countr_zero(e & reach));
            CoefficientFn g = CoefficientFn::constant(n, rng.small_rational(3, 2) + Q(1, 3));
            int bump_axis = -1;
            for (int i = 0; i < n; ++i) {
                auto [wl, wh] = window(U, static_cast<std::size_t>(i));
                if ((reach >> i) & 1) {
                    Q a = rand_between(rng, wl, wh);
                    g = g * CoefficientFn::step(n, i, a, a + 1);
                    out.threshold[static_cast<std::size_t>(i)] = std::max(out.threshold[static_cast<std::size_t>(i)], Q(a + 1).get_d());
                } else {
                    g = g * random_bump_factor(rng, n, i, wl, wh);
                    bump_axis = i;
                }
            }
            if (bump_axis >= 0 && rng.uniform_int(0, 1))
                g = g * (CoefficientFn::constant(n, 1) + rng.small_rational(2, 2) * CoefficientFn::coordinate(n, bump_axis));
            f += g;
        }
        out.add(m, f);
    }
    return out;
}

LagerbergFormField positive_test_field(const OpenSet& U, int q, const std::vector<Mask>& indices, const QVec& lambda,
                                       const CoefficientFn& f) {
    LagerbergFormField out(U.n, U.infinite);
    int s = cocoef_sign(q);
    for (std::size_t a = 0; a < indices.size(); ++a)
        for (std::size_t b = 0; b < indices.size(); ++b) {
            Q c = lambda[a] * lambda[b] * s;
            if (c != 0) out.add(make_mono(indices[a], indices[b], U.n), c * f);
        }
    return out;
}

LagerbergFormField random_positive_test_field(Rng& rng, const OpenSet& U, int q) {
    int n = U.n;
    auto all = subsets_of_size(n, q);
    std::vector<Mask> idx;
    QVec lambda;
    for (Mask I : all)
        if (rng.uniform_int(0, 1)) {
            idx.push_back(I);
            lambda.push_back(rng.small_rational(3, 2));
        }
    if (idx.empty()) {
        idx.push_back(all[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(all.size()) - 1))]);
        lambda.push_back(Q(1));
    }
    Mask touched = 0;
    for (Mask I : idx) touched |= I;
    Mask reach = 0;
    for (int i : mask_elements(U.infinite & ~touched))
        if (!U.hi[static_cast<std::size_t>(i)] && rng.uniform_int(0, 1)) reach |= Mask(1) << i;
    for (Mask e : U.excluded)
        while (reach && is_submask(e, reach)) reach &= ~(Mask(1) << std::countr_zero(e & reach));
    CoefficientFn f = CoefficientFn::constant(n, qfrac(rng.uniform_int(1, 4), 2));
    LagerbergFormField field(n, U.infinite);
    for (int i = 0; i < n; ++i) {
        auto [wl, wh] = window(U, static_cast<std::size_t>(i));
        if ((reach >> i) & 1) {
            Q a = rand_between(rng, wl, wh);
            f = f * CoefficientFn::step(n, i, a, a + 1);
        } else {
            f = f * random_bump_factor(rng, n, i, wl, wh);
        }
    }
    auto out = positive_test_field(U, q, idx, lambda, f);
    for (int i = 0; i < n; ++i) out.threshold[static_cast<std::size_t>(i)] = window(U, static_cast<std::size_t>(i)).second.get_d() + 1;
    return out;
}

// ---------------------------------------------------------------- closedness

ClosednessResult closedness_test(const LagerbergCurrent& t, int count, double tol, std::uint64_t seed) {
    ClosednessResult res;
    if (t.complex) {
        try {
            res.balanced = balancing_check(*t.complex).balanced;
        } catch (const CurrentError&) {
        }
    }
    if (t.q == 0) {
        res.closed = Answer::Yes;
        res.message = "top degree: no test forms of lower degree";
        return res;
    }
    Rng rng(seed);
    std::string failures;
    for (int k = 0; k < count; ++k) {
        bool prime = k % 2 == 0;
        LagerbergFormField beta = prime ? random_test_field(rng, t.U, t.q - 1, t.q) : random_test_field(rng, t.U, t.q, t.q - 1);
        LagerbergFormField dbeta = differentiate(prime ? DiffKind::DPrime : DiffKind::DDoublePrime, beta);
        if (dbeta.is_zero()) continue;
        try {
            double v = evaluate(t, dbeta, 1e-11);
            double scale = field_scale(t, dbeta, 1e-11);
            double r = std::abs(v) / scale;
            if (r > res.max_residual) res.max_residual = r;
            if (r > tol && res.closed != Answer::No) {
                res.closed = Answer::No;
                res.witness = beta;
                std::ostringstream os;
                os << "T(" << (prime ? "d'" : "d''") << "β) = " << v << " for test form " << k;
                res.message = os.str();
            }
        } catch (const CurrentError& e) {
            failures = e.what();
        }
    }
    if (res.closed == Answer::No) return res;
    if (!failures.empty()) {
        res.message = "evaluation failed: " + failures;
        return res;
    }
    res.closed = Answer::Yes;
    std::ostringstream os;
    os << "max residual " << res.max_residual << " over " << count << " test forms";
    res.message = os.str();
    return res;
}

// ---------------------------------------------------------------- positivity

namespace {

bool same_atom_key(const Atom& a, const Atom& b) {
    return a.pt.infinite == b.pt.infinite && a.pt.u == b.pt.u && a.pi_power == b.pi_power;
}

bool same_density_key(const Density& a, const Density& b) {
    return a.stratum == b.stratum && a.A == b.A && a.b == b.b && a.poly == b.poly && a.w == b.w && a.pi_power == b.pi_power;
}

// Whether a density group is mutually singular with every other group.
bool isolated_density(const std::vector<CoGroup>& groups, std::size_t gi) {
    const Density& d = groups[gi].density_rep;
    for (std::size_t j = 0; j < groups.size(); ++j) {
        if (j == gi || groups[j].atom) continue;
        const Density& e = groups[j].density_rep;
        if (e.stratum != d.stratum || e.k() != d.k()) continue;
        if (e.A == d.A && e.b == d.b) {
            Polyhedron both = d.poly;
            for (std::size_t r = 0; r < e.poly.G.size(); ++r) both.add(e.poly.G[r], e.poly.h[r]);
            if (interior_point(both).second > 0) return false;
            continue;
        }
        // Same affine span with a different frame is not resolved.
        Mat<Q> cols = d.A;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            cols[i].insert(cols[i].end(), e.A[i].begin(), e.A[i].end());
            cols[i].push_back(e.b[i] - d.b[i]);
        }
        if (exact_rank(cols) == static_cast<std::size_t>(d.k())) return false;
    }
    return true;
}

}  // namespace

std::vector<CoGroup> coefficient_groups(const std::map<IndexPair, PieceMeasure>& co) {
    std::vector<CoGroup> groups;
    std::vector<std::map<IndexPair, Q>> entries;
    for (auto& [k, mu] : co) {
        for (auto& a : mu.atoms) {
            auto it = std::find_if(groups.begin(), groups.end(), [&](const CoGroup& g) { return g.atom && same_atom_key(g.atom_rep, a); });
            if (it == groups.end()) {
                groups.push_back(CoGroup{true, a, Density{}, {}, {}, true});
                entries.emplace_back();
                it = groups.end() - 1;
            }
            entries[static_cast<std::size_t>(it - groups.begin())][k] += a.w;
        }
        for (auto& d : mu.densities) {
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const CoGroup& g) { return !g.atom && same_density_key(g.density_rep, d); });
            if (it == groups.end()) {
                groups.push_back(CoGroup{false, Atom{}, d, {}, {}, true});
                entries.emplace_back();
                it = groups.end() - 1;
            }
            entries[static_cast<std::size_t>(it - groups.begin())][k] += d.coef * d.sign;
        }
    }
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        auto& g = groups[gi];
        auto& idx = g.indices;
        for (auto& [k, v] : entries[gi]) {
            idx.push_back(k.first);
            idx.push_back(k.second);
        }
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        g.matrix = zero_mat<Q>(idx.size(), idx.size());
        for (auto& [k, v] : entries[gi]) {
            auto a = static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), k.first) - idx.begin());
            auto b = static_cast<std::size_t>(std::lower_bound(idx.begin(), idx.end(), k.second) - idx.begin());
            g.matrix[a][b] = v;
        }
    }
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        if (!groups[gi].atom) groups[gi].isolated = isolated_density(groups, gi);
    return groups;
}

ChartPoint group_point(const CoGroup& g, int n) {
    if (g.atom) return g.atom_rep.pt;
    ChartPoint x;
    auto [t0p, slack] = interior_point(g.density_rep.poly);
    x.infinite = g.density_rep.stratum;
    x.u.assign(static_cast<std::size_t>(n), Q(0));
    for (std::size_t i = 0; i < x.u.size(); ++i)
        if (!((x.infinite >> i) & 1)) x.u[i] = g.density_rep.b[i] + dotq(g.density_rep.A[i], t0p);
    return x;
}

namespace {

CoefficientFn concentrated_bump(const OpenSet& U, const ChartPoint& x) {
    int n = U.n;
    CoefficientFn f = CoefficientFn::constant(n, 1);
    for (int i = 0; i < n; ++i) {
        auto ii = static_cast<std::size_t>(i);
        if ((x.infinite >> i) & 1) {
            f = f * CoefficientFn::step(n, i, Q(0), Q(1));
            continue;
        }
        Q r(1, 4);
        if (U.lo[ii]) r = std::min(r, Q((x.u[ii] - *U.lo[ii]) / 2));
        if (U.hi[ii]) r = std::min(r, Q((*U.hi[ii] - x.u[ii]) / 2));
        f = f * CoefficientFn::bump(n, i, x.u[ii] - r, x.u[ii] + r);
    }
    return f;
}

}  // namespace

CurrentPositivity positivity_check(const LagerbergCurrent& t0, int samples, std::uint64_t seed, double tol) {
    CurrentPositivity res;
    LagerbergCurrent t = t0;
    std::string unknown;
    if (!t.has_evaluator()) {
        t.normalize();
        for (auto& [k, mu] : t.co)
            if (!mu.is_measure()) {
                res.answer = Answer::No;
                res.reason = "co-coefficient " + mask_str(k.first) + mask_str(k.second) + " is not a measure";
                return res;
            }
        for (auto& [k, mu] : t.co)
            if (!same_pieces(mu, t.cocoef(k.second, k.first))) {
                res.answer = Answer::No;
                res.asymmetric = k;
                res.reason = "T^{IJ} differs from T^{JI} for I=" + mask_str(k.first) + ", J=" + mask_str(k.second);
                return res;
            }
        auto groups = coefficient_groups(t.co);
        for (auto& g : groups) {
            const auto& idx = g.indices;
            const auto& M = g.matrix;
            auto ldl = exact_ldl(M);
            if (ldl.psd) continue;
            bool iso = g.isolated;
            std::string where = g.atom ? "atom group" : "density group";
            if (!iso) {
                unknown = where + " overlaps differently framed pieces";
                continue;
            }
            res.answer = Answer::No;
            res.group_indices = idx;
            res.lambda = ldl.witness;
            res.reason = "co-coefficient matrix of a " + where + " is not positive semidefinite";
            for (std::size_t a = 0; a < idx.size() && !res.estimate; ++a) {
                if (M[a][a] < 0) {
                    res.reason = "diagonal co-coefficient " + mask_str(idx[a]) + mask_str(idx[a]) + " is negative";
                    break;
                }
                for (std::size_t b = 0; b < idx.size(); ++b) {
                    if (a == b || M[a][b] * M[a][b] <= M[a][a] * M[b][b]) continue;
                    Q la = 1, lb = 1;
                    if (M[a][a] != 0 || M[b][b] != 0) {
                        la = q_of(std::sqrt(M[b][b].get_d()));
                        lb = q_of(std::sqrt(M[a][a].get_d()));
                        if (la == 0) la = Q(1, 1024);
                        if (lb == 0) lb = Q(1, 1024);
                    }
                    if (la * lb * qabs(M[a][b]) * 2 > la * la * M[a][a] + lb * lb * M[b][b]) {
                        res.estimate = Estimate30Witness{idx[a], idx[b], la, lb, where};
                        res.reason += "; the estimate 2λ_Iλ_J|T^{IJ}| <= λ_I^2 T^{II} + λ_J^2 T^{JJ} fails";
                        break;
                    }
                }
            }
            ChartPoint x = group_point(g, t.n);
            auto form = positive_test_field(t.U, t.q, idx, ldl.witness, concentrated_bump(t.U, x));
            try {
                double v = evaluate(t, form, 1e-10);
                if (v < 0) {
                    res.witness_form = form;
                    res.witness_value = v;
                }
            } catch (const CurrentError&) {
            }
            return res;
        }
    }
    Rng rng(seed);
    for (int k = 0; k < samples; ++k) {
        auto alpha = random_positive_test_field(rng, t.U, t.q);
        try {
            double v = evaluate(t, alpha, 1e-10);
            double scale = t.has_evaluator() ? 1.0 : field_scale(t, alpha, 1e-10);
            if (v < -tol * scale) {
                res.answer = Answer::No;
                res.witness_form = alpha;
                res.witness_value = v;
                res.reason = "negative value on a positive test form";
                return res;
            }
        } catch (const CurrentError& e) {
            unknown = e.what();
        }
    }
    if (t.has_evaluator()) {
        res.answer = Answer::Unknown;
        res.reason = "evaluator current: no negative value on " + std::to_string(samples) + " positive test forms";
        return res;
    }
    if (!unknown.empty()) {
        res.answer = Answer::Unknown;
        res.reason = unknown;
        return res;
    }
    res.answer = Answer::Yes;
    res.reason = "symmetric, positive semidefinite co-coefficient matrices, nonnegative on sampled positive forms";
    return res;
}

// ---------------------------------------------------------------- decomposition and boundary

std::map<Mask, LagerbergCurrent> canonical_decomposition(const LagerbergCurrent& t, bool require_positive) {
    if (t.has_evaluator()) throw CurrentError("Unsupported", "evaluator currents have no co-coefficients");
    if (require_positive) {
        auto pc = positivity_check(t);
        if (pc.answer != Answer::Yes) throw CurrentError("NotPositive", pc.reason);
    }
    std::map<Mask, LagerbergCurrent> out;
    Mask inf = t.U.infinite;
    for (Mask s = inf;; s = (s - 1) & inf) {
        if (t.U.has_stratum(s)) {
            LagerbergCurrent part(t.U, t.q);
            part.label = t.label;
            for (auto& [k, mu] : t.co) part.add(k.first, k.second, restrict_to_stratum(mu, s));
            if (s == 0) part.complex = t.complex;
            part.normalize();
            out.emplace(s, std::move(part));
        }
        if (s == 0) break;
    }
    return out;
}

CFiniteResult c_finite_test(const LagerbergCurrent& t) {
    CFiniteResult res;
    if (t.has_evaluator()) {
        res.message = "evaluator current: co-coefficients unavailable";
        return res;
    }
    for (auto& [k, mu] : t.co) {
        auto [I, J] = k;
        res.I = I;
        res.J = J;
        if (!mu.is_measure()) {
            res.answer = Answer::No;
            res.message = "co-coefficient is not a measure";
            return res;
        }
        QVec extra(static_cast<std::size_t>(t.n), Q(0));
        for (int i : mask_elements(I)) extra[static_cast<std::size_t>(i)] -= 1;
        for (int j : mask_elements(J)) extra[static_cast<std::size_t>(j)] -= 1;
        auto r = local_finiteness(total_variation(mu), t.U.infinite, 0, extra, t.U.excluded);
        if (!r.ok) {
            res.answer = Answer::No;
            res.detail = r;
            res.message = "|T^{IJ}| e^{-u_I-u_J} for I=" + mask_str(I) + ", J=" + mask_str(J) + " near stratum " +
                          mask_str(r.toward) + ": " + r.message;
            return res;
        }
    }
    res.answer = Answer::Yes;
    res.message = "all weighted co-coefficients are locally finite";
    return res;
}

Extension extend_by_zero(const LagerbergCurrent& t, const std::vector<Mask>& strata, int closed_samples, double tol,
                         std::uint64_t seed) {
    LagerbergCurrent target = t;
    for (Mask s : strata) {
        auto it = std::find(target.U.excluded.begin(), target.U.excluded.end(), s);
        if (it == target.U.excluded.end()) throw CurrentError("InvalidInput", "stratum " + mask_str(s) + " is not excluded from U");
        target.U.excluded.erase(it);
    }
    auto cf = c_finite_test(target);
    if (cf.answer != Answer::Yes) throw CurrentError("NotCFinite", cf.message);
    for (auto& [k, mu] : target.co) {
        auto r = local_finiteness(total_variation(mu), target.U.infinite, k.first | k.second, std::nullopt, target.U.excluded);
        if (!r.ok) throw CurrentError("NotLocallyFinite", r.message);
    }
    Extension ext{target, {}};
    ext.closed = closedness_test(target, closed_samples, tol, seed);
    return ext;
}

// ---------------------------------------------------------------- integration currents

LagerbergCurrent integration_current(const WeightedComplex& c) {
    validate_complex(c);
    LagerbergCurrent t(OpenSet::whole(c.n), c.dim);
    t.label = "integration current";
    for (auto& cell : c.cells) {
        if (cell.weight == 0) continue;
        if (c.dim == 0) {
            PieceMeasure m(c.n);
            m.atoms.push_back(dirac(finite_point(cell.b), Q(cell.weight)));
            Mask none = 0;
            t.add(none, none, m);
            continue;
        }
        auto subsets = subsets_of_size(c.n, c.dim);
        std::vector<Q> dets;
        for (Mask I : subsets) {
            Mat<Q> sub;
            for (int i : mask_elements(I)) sub.push_back(cell.A[static_cast<std::size_t>(i)]);
            dets.push_back(exact_det(sub));
        }
        for (std::size_t a = 0; a < subsets.size(); ++a)
            for (std::size_t b = 0; b < subsets.size(); ++b) {
                Q coef = Q(cell.weight) * dets[a] * dets[b];
                if (coef == 0) continue;
                PieceMeasure m(c.n);
                m.densities.push_back(make_density(c.n, 0, cell.A, cell.b, cell.poly, Weight{}, coef));
                t.add(subsets[a], subsets[b], m);
            }
    }
    t.complex = c;
    return t;
}

BalancingResult balancing_check(const WeightedComplex& c) {
    validate_complex(c);
    BalancingResult res;
    if (c.dim == 0) return res;
    if (c.dim != 1) throw CurrentError("Unsupported", "balancing is implemented for one-dimensional complexes");
    std::vector<std::pair<QVec, QVec>> sums;
    auto add = [&](const QVec& pt, const QVec& v) {
        auto it = std::find_if(sums.begin(), sums.end(), [&](const auto& s) { return s.first == pt; });
        if (it == sums.end()) {
            sums.push_back({pt, QVec(v.size(), Q(0))});
            it = sums.end() - 1;
        }
        for (std::size_t i = 0; i < v.size(); ++i) it->second[i] += v[i];
    };
    for (auto& cell : c.cells) {
        std::optional<Q> lo, hi;
        for (std::size_t r = 0; r < cell.poly.G.size(); ++r) {
            Q g = cell.poly.G[r][0];
            if (g == 0) continue;
            Q v = cell.poly.h[r] / g;
            if (g > 0) hi = hi ? std::min(*hi, v) : v;
            else lo = lo ? std::max(*lo, v) : v;
        }
        QVec dir(static_cast<std::size_t>(c.n));
        for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = Q(cell.weight) * cell.A[i][0];
        auto point = [&](const Q& t) {
            QVec u(cell.b);
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += cell.A[i][0] * t;
            return u;
        };
        if (lo) add(point(*lo), dir);
        if (hi) {
            QVec neg = dir;
            for (auto& x : neg) x = -x;
            add(point(*hi), neg);
        }
    }
    for (auto& [pt, s] : sums)
        if (std::any_of(s.begin(), s.end(), [](const Q& x) { return x != 0; })) {
            res.balanced = false;
            res.vertex = pt;
            res.residual = s;
            std::string m = "weighted primitive directions at (";
            for (std::size_t i = 0; i < pt.size(); ++i) m += (i ? "," : "") + to_string(pt[i]);
            m += ") sum to (";
            for (std::size_t i = 0; i < s.size(); ++i) m += (i ? "," : "") + to_string(s[i]);
            res.message = m + ")";
            return res;
        }
    res.message = "balanced at every vertex";
    return res;
}

// ---------------------------------------------------------------- products and exemplars

LagerbergCurrent wedge_with_form(const LagerbergFormField& beta, const LagerbergCurrent& t) {
    if (t.has_evaluator()) throw CurrentError("Unsupported", "evaluator current");
    if (beta.is_zero()) return LagerbergCurrent(t.U, t.q);
    auto [p1, q1] = beta.bidegree();
    if (p1 != q1 || p1 > t.q) throw CurrentError("InvalidInput", "form has the wrong bidegree");
    int q2 = t.q - p1;
    LagerbergCurrent out(t.U, q2);
    out.label = t.label;
    int n = t.n;
    for (Mask K : subsets_of_size(n, q2))
        for (Mask L : subsets_of_size(n, q2)) {
            Mono kl = make_mono(K, L, n);
            for (auto& [m, c] : beta.coeffs) {
                int s = wedge_sign(m, kl);
                if (s == 0) continue;
                Mask I = mono_i(m, n) | K, J = mono_j(m, n) | L;
                auto it = t.co.find({I, J});
                if (it == t.co.end()) continue;
                Q factor(s * cocoef_sign(q2) * cocoef_sign(t.q));
                out.add(K, L, scaled(modulated(it->second, c), factor));
            }
        }
    out.normalize();
    return out;
}

LagerbergCurrent form_current(const LForm& omega) {
    int n = omega.n;
    auto [p, pp] = omega.bidegree();
    if (p != pp) throw CurrentError("InvalidInput", "form is not of bidegree (p,p)");
    int q = n - p;
    LagerbergCurrent t(OpenSet::whole(n), q);
    t.label = "current of a constant form";
    Mat<Q> id = embedding(n, 0);
    for (Mask I : subsets_of_size(n, q))
        for (Mask J : subsets_of_size(n, q)) {
            Q kappa = wedge(omega, LForm::mono(n, I, J, Q(1))).coeff(all_axes(n), all_axes(n));
            if (kappa == 0) continue;
            PieceMeasure m(n);
            m.densities.push_back(make_density(n, 0, id, QVec(static_cast<std::size_t>(n), Q(0)), Polyhedron::whole(n),
                                               Weight{}, kappa * cocoef_sign(q) * interleave_sign(n)));
            t.add(I, J, m);
        }
    return t;
}

LagerbergCurrent derivative_atom_current(int n, const QVec& point, const QVec& dir) {
    LagerbergCurrent t(OpenSet::whole(n), n);
    t.label = "directional derivative at a point";
    PieceMeasure m(n);
    m.derivative_atoms.push_back({finite_point(point), dir, Q(-1)});
    t.add(all_axes(n), all_axes(n), m);
    return t;
}

namespace {

OpenSet positive_half_line() {
    OpenSet U = OpenSet::whole(1, 1);
    U.lo[0] = Q(0);
    return U;
}

LagerbergCurrent half_line_density(const Weight& w, const std::string& label) {
    LagerbergCurrent t(positive_half_line(), 1);
    t.label = label;
    PieceMeasure m(1);
    m.densities.push_back(make_density(1, 0, {{Q(1)}}, {Q(0)}, Polyhedron::box({{Q(0), std::nullopt}}), w, Q(1)));
    t.add(1, 1, m);
    return t;
}

}  // namespace

LagerbergCurrent gaussian_density_current() {
    Weight w;
    w.quad = {{Q(1)}};
    w.lin = {Q(0)};
    return half_line_density(w, "density e^{u^2} on (0,inf)");
}

LagerbergCurrent exponential_density_current(const Q& rate) {
    Weight w;
    w.lin = {rate};
    return half_line_density(w, "density e^{" + to_string(rate) + " u} on (0,inf)");
}

LagerbergCurrent double_exponential_evaluator_current() {
    LagerbergCurrent t(positive_half_line(), 0);
    t.label = "f -> integral of e^{2e^u} f'(u) over (0,inf)";
    t.evaluator = [](const LagerbergFormField& a, double tol) {
        auto it = a.coeffs.find(Mono(0));
        if (it == a.coeffs.end()) return 0.0;
        CoefficientFn g = it->second.derivative(0);
        auto box = g.support_box();
        double lo = std::max(0.0, box[0].first), hi = box[0].second;
        if (!(lo < hi)) return 0.0;
        if (std::isinf(hi)) throw CurrentError("SupportEscapesU", "derivative is not compactly supported");
        auto h = [&](double x) { return std::exp(2 * std::exp(x)) * g.eval({x}); };
        double err = 0;
        double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(h, lo, hi, 15, 1e-12, &err);
        if (!std::isfinite(v)) throw CurrentError("Divergent", "integrand overflows");
        if (err > std::max(tol, 1e-10 * std::abs(v))) throw CurrentError("ToleranceNotMet", "quadrature error too large");
        return v;
    };
    return t;
}

WeightedComplex tropical_line(const QVec& apex, long w1, long w2, long w3) {
    WeightedComplex c{2, 1, {}};
    c.cells.push_back(ray_cell(apex, {-1, 0}, w1));
    c.cells.push_back(ray_cell(apex, {0, -1}, w2));
    c.cells.push_back(ray_cell(apex, {1, 1}, w3));
    return c;
}

WeightedComplex random_balanced_fan(Rng& rng, int rays, const QVec& apex) {
    for (;;) {
        std::vector<std::vector<long>> dirs;
        std::vector<long> weights;
        std::vector<long> sum(2, 0);
        bool ok = true;
        for (int r = 0; r + 1 < rays; ++r) {
            std::vector<long> v{rng.uniform_int(-3, 3), rng.uniform_int(-3, 3)};
            long g = std::gcd(v[0], v[1]);
            if (g == 0) {
                ok = false;
                break;
            }
            v[0] /= g;
            v[1] /= g;
            long w = rng.uniform_int(1, 2);
            dirs.push_back(v);
            weights.push_back(w);
            sum[0] += w * v[0];
            sum[1] += w * v[1];
        }
        long g = std::gcd(sum[0], sum[1]);
        if (!ok || g == 0) continue;
        dirs.push_back({-sum[0] / g, -sum[1] / g});
        weights.push_back(g);
        for (std::size_t a = 0; a < dirs.size() && ok; ++a)
            for (std::size_t b = a + 1; b < dirs.size(); ++b)
                if (dirs[a] == dirs[b]) ok = false;
        if (!ok) continue;
        WeightedComplex c{2, 1, {}};
        for (std::size_t a = 0; a < dirs.size(); ++a) c.cells.push_back(ray_cell(apex, dirs[a], weights[a]));
        return c;
    }
}

LagerbergCurrent random_closed_positive(Rng& rng, int n, int q, Mask infinite) {
    OpenSet U = OpenSet::whole(n, infinite);
    LagerbergCurrent t(U, q);
    t.label = "random closed positive current";
    if (q == 0) {
        PieceMeasure m(n);
        int atoms = static_cast<int>(rng.uniform_int(1, 3));
        for (int k = 0; k < atoms; ++k) {
            Mask s = static_cast<Mask>(rng.next()) & infinite;
            QVec u(static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = ((s >> i) & 1) ? Q(0) : rng.small_rational(4, 3);
            m.atoms.push_back(dirac(ChartPoint{s, u}, qfrac(rng.uniform_int(1, 5), rng.uniform_int(1, 3))));
        }
        int dens = static_cast<int>(rng.uniform_int(0, 2));
        for (int k = 0; k < dens; ++k) {
            Mask s = static_cast<Mask>(rng.next()) & infinite;
            int dim = n - popcount(s);
            if (dim == 0) continue;
            Mat<Q> A = embedding(n, s);
            std::vector<std::pair<std::optional<Q>, std::optional<Q>>> box;
            Weight w;
            w.lin.assign(static_cast<std::size_t>(dim), Q(0));
            std::size_t col = 0;
            for (int i = 0; i < n; ++i) {
                if ((s >> i) & 1) continue;
                Q a = rng.small_rational(3, 2);
                if (((infinite >> i) & 1) && rng.uniform_int(0, 1)) {
                    box.push_back({a, std::nullopt});
                    w.lin[col] = -Q(rng.uniform_int(1, 2));
                } else {
                    box.push_back({a, a + qfrac(rng.uniform_int(1, 4), 2)});
                }
                ++col;
            }
            m.densities.push_back(make_density(n, s, A, QVec(static_cast<std::size_t>(n), Q(0)), Polyhedron::box(box), w,
                                               qfrac(rng.uniform_int(1, 3), rng.uniform_int(1, 2))));
        }
        t.add(0, 0, m);
        return t;
    }
    int blocks = static_cast<int>(rng.uniform_int(1, 2));
    for (int b = 0; b < blocks; ++b) {
        std::vector<Mask> choices;
        for (Mask s = infinite;; s = (s - 1) & infinite) {
            if (popcount(infinite & ~s) <= q && n - popcount(s) >= q) choices.push_back(s);
            if (s == 0) break;
        }
        if (choices.empty()) break;
        Mask s = choices[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(choices.size()) - 1))];
        Mask must = infinite & ~s;
        std::vector<Mask> pool;
        for (Mask I : subsets_of_size(n, q))
            if (is_submask(must, I) && (I & s) == 0) pool.push_back(I);
        std::vector<Mask> idx;
        for (Mask I : pool)
            if (idx.size() < 3 && rng.uniform_int(0, 1)) idx.push_back(I);
        if (idx.empty()) idx.push_back(pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(pool.size()) - 1))]);
        Mat<Q> H = zero_mat<Q>(idx.size(), idx.size());
        for (int r = 0; r < 2; ++r) {
            QVec v(idx.size());
            for (auto& x : v) x = rng.small_rational(2, 2);
            for (std::size_t a = 0; a < idx.size(); ++a)
                for (std::size_t c = 0; c < idx.size(); ++c) H[a][c] += v[a] * v[c];
        }
        Mat<Q> A = embedding(n, s);
        int dim = n - popcount(s);
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t c = 0; c < idx.size(); ++c) {
                if (H[a][c] == 0) continue;
                PieceMeasure m(n);
                m.densities.push_back(make_density(n, s, A, QVec(static_cast<std::size_t>(n), Q(0)), Polyhedron::whole(dim),
                                                   Weight{}, H[a][c]));
                t.add(idx[a], idx[c], m);
            }
    }
    if (n == 2 && q == 1 && rng.uniform_int(0, 1)) {
        QVec apex{rng.small_rational(2, 2), rng.small_rational(2, 2)};
        auto fan = random_balanced_fan(rng, static_cast<int>(rng.uniform_int(3, 4)), apex);
        auto d = integration_current(fan);
        d.U = U;
        for (auto& [k, m] : d.co) t.add(k.first, k.second, m);
    }
    t.normalize();
    return t;
}

std::string describe(const LagerbergCurrent& t) {
    std::ostringstream os;
    os << "(" << t.p() << "," << t.p() << ") current on R_inf^" << t.n;
    if (!t.label.empty()) os << " [" << t.label << "]";
    if (t.has_evaluator()) os << ", evaluator";
    else os << ", " << t.co.size() << " co-coefficients";
    return os.str();
}

}  // namespace trop
