#include "trop/measures.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace trop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class T>
bool vec_less(const std::vector<T>& a, const std::vector<T>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

bool mat_less(const Mat<Q>& a, const Mat<Q>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [](const QVec& x, const QVec& y) { return vec_less(x, y); });
}

// Scale a row so that its first nonzero coefficient has absolute value one.
void normalize_row(QVec& g, Q& h) {
    for (auto& v : g)
        if (v != 0) {
            Q s = qabs(v);
            for (auto& w : g) w /= s;
            h /= s;
            return;
        }
}

double pi_factor(int k) { return std::pow(std::numbers::pi, k); }

QVec row_times(const QVec& g, const Mat<Q>& A) {
    std::size_t k = A.empty() ? 0 : A[0].size();
    QVec r(k, Q(0));
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] != 0)
            for (std::size_t j = 0; j < k; ++j) r[j] += g[i] * A[i][j];
    return r;
}

Q dot(const QVec& a, const QVec& b) {
    Q s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

QVec mat_vec(const Mat<Q>& M, const QVec& v) {
    QVec r(M.size(), Q(0));
    for (std::size_t i = 0; i < M.size(); ++i) r[i] = dot(M[i], v);
    return r;
}

std::string vec_str(const QVec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + to_string(v[i]);
    return s + ")";
}

// Fourier-Motzkin levels: level j holds rows involving only t_0..t_j.
struct Levels {
    std::vector<std::vector<std::pair<QVec, Q>>> rows;
    bool empty = false;
};

Levels fourier_motzkin(const Polyhedron& p) {
    Levels lv;
    int k = p.dim;
    lv.rows.resize(static_cast<std::size_t>(k));
    std::vector<std::pair<QVec, Q>> cur;
    for (std::size_t r = 0; r < p.G.size(); ++r) cur.emplace_back(p.G[r], p.h[r]);
    for (int j = k - 1; j >= 0; --j) {
        auto jj = static_cast<std::size_t>(j);
        std::vector<std::pair<QVec, Q>> keep, pos, neg, next;
        for (auto& [g, h] : cur) {
            bool any = std::any_of(g.begin(), g.end(), [](const Q& x) { return x != 0; });
            if (!any) {
                if (h < 0) lv.empty = true;
                continue;
            }
            if (g[jj] > 0) pos.emplace_back(g, h);
            else if (g[jj] < 0) neg.emplace_back(g, h);
            else next.emplace_back(g, h);
            keep.emplace_back(g, h);
        }
        lv.rows[jj] = keep;
        for (auto& [gp, hp] : pos)
            for (auto& [gn, hn] : neg) {
                QVec g(gp.size());
                for (std::size_t i = 0; i < g.size(); ++i) g[i] = gp[i] * (-gn[jj]) + gn[i] * gp[jj];
                Q h = hp * (-gn[jj]) + hn * gp[jj];
                g[jj] = 0;
                normalize_row(g, h);
                next.emplace_back(g, h);
            }
        // Deduplicate keeping the tightest right-hand side per direction.
        std::sort(next.begin(), next.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return vec_less(a.first, b.first);
            return a.second < b.second;
        });
        cur.clear();
        for (auto& r : next)
            if (cur.empty() || cur.back().first != r.first) cur.push_back(r);
    }
    for (auto& [g, h] : cur)
        if (h < 0) lv.empty = true;
    return lv;
}

std::pair<double, double> level_bounds(const std::vector<std::pair<QVec, Q>>& rows, std::size_t j,
                                       const std::vector<double>& t) {
    double lo = -kInf, hi = kInf;
    for (auto& [g, h] : rows) {
        double gj = g[j].get_d();
        if (gj == 0) continue;
        double rhs = h.get_d();
        for (std::size_t i = 0; i < j; ++i) rhs -= g[i].get_d() * t[i];
        double v = rhs / gj;
        if (gj > 0) hi = std::min(hi, v);
        else lo = std::max(lo, v);
    }
    return {lo, hi};
}

double integrate_levels(const Levels& lv, const std::function<double(const std::vector<double>&)>& f,
                        std::vector<double>& t, std::size_t j, double tol, double* err) {
    if (j == t.size()) {
        *err = 0;
        return f(t);
    }
    auto [lo, hi] = level_bounds(lv.rows[j], j, t);
    if (!(lo < hi)) {
        *err = 0;
        return 0.0;
    }
    double inner_max = 0;
    auto g = [&](double x) {
        t[j] = x;
        double e = 0;
        double v = integrate_levels(lv, f, t, j + 1, tol, &e);
        inner_max = std::max(inner_max, e);
        return v;
    };
    double e = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, lo, hi, 15, tol, &e);
    double width = std::isfinite(hi - lo) ? hi - lo : 1.0;
    *err = e + inner_max * width;
    return v;
}

// Decay of exp(t'Qt + L.t) along the rays of a pointed cone; returns a failing ray.
std::optional<QVec> failing_ray(const std::vector<QVec>& rays, const Mat<Q>& quad, const QVec& L, std::string* why) {
    bool has_quad = !quad.empty();
    for (auto& r : rays) {
        Q qv = has_quad ? dot(r, mat_vec(quad, r)) : Q(0);
        if (qv > 0) {
            *why = "quadratic exponent grows along the ray";
            return r;
        }
        if (qv == 0) {
            if (has_quad) {
                QVec qr = mat_vec(quad, r);
                if (std::any_of(qr.begin(), qr.end(), [](const Q& x) { return x != 0; })) {
                    *why = "exponent is degenerate along the ray; finiteness is not decided";
                    return r;
                }
            }
            if (dot(L, r) >= 0) {
                *why = "exponent does not decrease along the ray";
                return r;
            }
        }
    }
    if (has_quad && rays.size() >= 2) {
        // Mixed directions: the exponent restricted to the cone must stay negative.
        for (std::size_t a = 0; a < rays.size(); ++a)
            for (std::size_t b = a + 1; b < rays.size(); ++b) {
                Q cross = dot(rays[a], mat_vec(quad, rays[b]));
                if (cross <= 0) continue;
                for (int s = 1; s < 40; ++s) {
                    Q lam(s, 40);
                    QVec v(rays[a].size());
                    for (std::size_t i = 0; i < v.size(); ++i) v[i] = lam * rays[a][i] + (1 - lam) * rays[b][i];
                    if (dot(v, mat_vec(quad, v)) >= 0) {
                        *why = "quadratic exponent does not decrease inside the cone";
                        return v;
                    }
                }
            }
    }
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------- Polyhedron

Polyhedron Polyhedron::box(const std::vector<std::pair<std::optional<Q>, std::optional<Q>>>& iv) {
    Polyhedron p = whole(static_cast<int>(iv.size()));
    for (std::size_t i = 0; i < iv.size(); ++i) {
        QVec e(iv.size(), Q(0));
        if (iv[i].second) {
            e[i] = 1;
            p.add(e, *iv[i].second);
        }
        if (iv[i].first) {
            e[i] = -1;
            p.add(e, -*iv[i].first);
        }
    }
    return p;
}

void Polyhedron::add(const QVec& g, const Q& rhs) {
    if (static_cast<int>(g.size()) != dim) throw MeasureError("InvalidInput", "constraint has wrong length");
    G.push_back(g);
    h.push_back(rhs);
}

bool Polyhedron::contains(const std::vector<double>& t, double slack) const {
    for (std::size_t r = 0; r < G.size(); ++r) {
        double s = 0;
        for (std::size_t j = 0; j < t.size(); ++j) s += G[r][j].get_d() * t[j];
        if (s > h[r].get_d() + slack) return false;
    }
    return true;
}

bool Polyhedron::contains(const QVec& t) const {
    for (std::size_t r = 0; r < G.size(); ++r)
        if (dot(G[r], t) > h[r]) return false;
    return true;
}

bool Polyhedron::is_empty() const {
    if (G.empty()) return false;
    std::size_t m = G.size(), k = static_cast<std::size_t>(dim);
    Mat<Q> a = zero_mat<Q>(m, 2 * k + m);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
            a[r][j] = G[r][j];
            a[r][k + j] = -G[r][j];
        }
        a[r][2 * k + r] = 1;
    }
    auto res = lp_solve<Q>(a, h, QVec(2 * k + m, Q(0)), Q(0));
    return res.status == LpStatus::Infeasible;
}

std::vector<QVec> Polyhedron::recession_rays(const Mat<Q>& E) const {
    std::size_t k = static_cast<std::size_t>(dim), m = G.size();
    std::vector<QVec> out;
    if (k == 0) return out;
    if (m > 20) throw MeasureError("Unsupported", "too many constraints for ray enumeration");
    std::set<QVec, decltype([](const QVec& a, const QVec& b) { return vec_less(a, b); })> seen;
    auto push = [&](QVec v) {
        Q dummy = 0;
        normalize_row(v, dummy);
        if (seen.insert(v).second) out.push_back(v);
    };
    // Lines in the cone are reported in both directions; the rest is the pointed cone orthogonal to them.
    Mat<Q> all = E;
    all.insert(all.end(), G.begin(), G.end());
    std::vector<QVec> lineality;
    if (all.empty()) {
        for (std::size_t j = 0; j < k; ++j) {
            QVec e(k, Q(0));
            e[j] = 1;
            lineality.push_back(e);
        }
    } else {
        lineality = exact_nullspace(all, k);
    }
    Mat<Q> eq = E;
    for (auto& l : lineality) {
        push(l);
        QVec neg = l;
        for (auto& x : neg) x = -x;
        push(neg);
        eq.push_back(l);
    }
    if (lineality.size() == k) return out;
    for (std::uint32_t s = 0; s < (1u << m); ++s) {
        if (static_cast<std::size_t>(std::popcount(s)) > k - 1) continue;
        Mat<Q> rows = eq;
        for (std::size_t r = 0; r < m; ++r)
            if ((s >> r) & 1) rows.push_back(G[r]);
        std::vector<QVec> ns;
        if (rows.empty()) {
            if (k != 1) continue;
            ns = {QVec{Q(1)}};
        } else {
            ns = exact_nullspace(rows, k);
        }
        if (ns.size() != 1) continue;
        for (int sg : {1, -1}) {
            QVec v = ns[0];
            for (auto& x : v) x *= sg;
            bool ok = true;
            for (std::size_t r = 0; r < m && ok; ++r)
                if (dot(G[r], v) > 0) ok = false;
            if (ok) push(v);
        }
    }
    return out;
}

// ---------------------------------------------------------------- weights and pieces

bool Weight::has_quad() const {
    for (auto& r : quad)
        for (auto& v : r)
            if (v != 0) return true;
    return false;
}

double Weight::exponent(const std::vector<double>& t) const {
    double e = cst.get_d();
    for (std::size_t i = 0; i < lin.size(); ++i) e += lin[i].get_d() * t[i];
    for (std::size_t i = 0; i < quad.size(); ++i)
        for (std::size_t j = 0; j < quad[i].size(); ++j) e += quad[i][j].get_d() * t[i] * t[j];
    return e;
}

std::vector<double> Density::point(const std::vector<double>& t) const {
    std::vector<double> u(A.size(), 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) {
        if ((stratum >> i) & 1) continue;
        double s = b[i].get_d();
        for (std::size_t j = 0; j < t.size(); ++j) s += A[i][j].get_d() * t[j];
        u[i] = s;
    }
    return u;
}

ChartPoint finite_point(const QVec& u) { return ChartPoint{0, u}; }
Atom dirac(const ChartPoint& p, const Q& w) { return Atom{p, w, 0}; }

namespace {

std::vector<Q> poly_trim(std::vector<Q> p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
    return p;
}
Q peval(const std::vector<Q>& p, const Q& x) {
    Q s = 0;
    for (std::size_t i = p.size(); i-- > 0;) s = s * x + p[i];
    return s;
}
std::vector<Q> pderiv(const std::vector<Q>& p) {
    std::vector<Q> d;
    for (std::size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * Q(static_cast<long>(i)));
    return poly_trim(d);
}
// Polynomial division a = q b + r.
std::pair<std::vector<Q>, std::vector<Q>> pdivmod(std::vector<Q> a, const std::vector<Q>& b) {
    a = poly_trim(a);
    std::vector<Q> q(a.size() >= b.size() ? a.size() - b.size() + 1 : 0, Q(0));
    while (a.size() >= b.size() && !a.empty()) {
        std::size_t sh = a.size() - b.size();
        Q c = a.back() / b.back();
        q[sh] = c;
        for (std::size_t i = 0; i < b.size(); ++i) a[sh + i] -= c * b[i];
        a = poly_trim(a);
    }
    return {poly_trim(q), a};
}
std::vector<Q> pgcd(std::vector<Q> a, std::vector<Q> b) {
    a = poly_trim(a);
    b = poly_trim(b);
    while (!b.empty()) {
        auto r = pdivmod(a, b).second;
        a = b;
        b = r;
    }
    if (!a.empty()) {
        Q lc = a.back();
        for (auto& v : a) v /= lc;
    }
    return a;
}
std::vector<Q> pmul(const std::vector<Q>& a, const std::vector<Q>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<Q> r(a.size() + b.size() - 1, Q(0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

// Product of the squarefree factors of odd multiplicity (Yun's algorithm).
std::vector<Q> odd_part(const std::vector<Q>& p) {
    std::vector<Q> dp = pderiv(p);
    if (dp.empty()) return {Q(1)};
    std::vector<Q> a = pgcd(p, dp);
    std::vector<Q> b = pdivmod(p, a).first, c = pdivmod(dp, a).first;
    std::vector<Q> d = c;
    {
        auto db = pderiv(b);
        d.resize(std::max(d.size(), db.size()), Q(0));
        for (std::size_t i = 0; i < db.size(); ++i) d[i] -= db[i];
        d = poly_trim(d);
    }
    std::vector<Q> out{Q(1)};
    for (int i = 1; b.size() > 1; ++i) {
        std::vector<Q> f = d.empty() ? b : pgcd(b, d);
        if (i % 2) out = pmul(out, f);
        b = pdivmod(b, f).first;
        c = pdivmod(d, f).first;
        auto db = pderiv(b);
        d = c;
        d.resize(std::max(d.size(), db.size()), Q(0));
        for (std::size_t k = 0; k < db.size(); ++k) d[k] -= db[k];
        d = poly_trim(d);
    }
    return out;
}

int sign_changes(const std::vector<std::vector<Q>>& seq, const std::optional<Q>& x, int at_inf) {
    int changes = 0, last = 0;
    for (auto& p : seq) {
        int s;
        if (x) s = sgn(peval(p, *x));
        else {
            s = sgn(p.back());
            if (at_inf < 0 && (p.size() - 1) % 2) s = -s;
        }
        if (s == 0) continue;
        if (last != 0 && s != last) ++changes;
        last = s;
    }
    return changes;
}

// Distinct real roots of g in (lo, hi).
int count_roots(const std::vector<Q>& g, const std::optional<Q>& lo, const std::optional<Q>& hi) {
    if (g.size() <= 1) return 0;
    std::vector<std::vector<Q>> seq{g, pderiv(g)};
    while (seq.back().size() > 1) {
        auto r = pdivmod(seq[seq.size() - 2], seq.back()).second;
        if (r.empty()) break;
        for (auto& v : r) v = -v;
        seq.push_back(r);
    }
    int c = sign_changes(seq, lo, -1) - sign_changes(seq, hi, 1);
    if (hi && peval(g, *hi) == 0) --c;
    return c;
}

}  // namespace

bool univariate_nonnegative(const std::vector<Q>& p0, const std::optional<Q>& lo, const std::optional<Q>& hi) {
    std::vector<Q> p = poly_trim(p0);
    if (p.empty()) return true;
    if (count_roots(odd_part(p), lo, hi) > 0) return false;
    // No sign change inside: test an interior point that is not a root.
    for (int k = 0; k < 64; ++k) {
        Q x;
        Q off(2 * k + 1, 2 * k + 3);
        if (lo && hi) x = *lo + (*hi - *lo) * off;
        else if (lo) x = *lo + Q(k + 1);
        else if (hi) x = *hi - Q(k + 1);
        else x = Q(k) - Q(32);
        Q v = peval(p, x);
        if (v != 0) return v > 0;
    }
    return true;
}

Density make_density(int n, Mask stratum, Mat<Q> A, QVec b, Polyhedron poly, Weight w, const Q& signed_coef,
                     int pi_power) {
    std::size_t k = static_cast<std::size_t>(poly.dim);
    if (A.size() != static_cast<std::size_t>(n) || b.size() != static_cast<std::size_t>(n))
        throw MeasureError("InvalidInput", "parametrization has wrong number of rows");
    Mat<Q> finite_rows;
    for (std::size_t i = 0; i < A.size(); ++i) {
        if (A[i].size() != k) throw MeasureError("InvalidInput", "parametrization has wrong number of columns");
        if ((stratum >> i) & 1) {
            if (std::any_of(A[i].begin(), A[i].end(), [](const Q& x) { return x != 0; }) || b[i] != 0)
                throw MeasureError("InvalidInput", "rows of infinite axes must vanish");
        } else {
            finite_rows.push_back(A[i]);
        }
    }
    if (k > 0 && exact_rank(finite_rows) != k) throw MeasureError("InvalidInput", "parametrization is not injective");
    if (w.lin.empty()) w.lin.assign(k, Q(0));
    if (w.lin.size() != k || (!w.quad.empty() && w.quad.size() != k))
        throw MeasureError("InvalidInput", "weight has wrong number of variables");
    if (w.pol.nvars() > k) throw MeasureError("InvalidInput", "weight polynomial uses too many variables");
    if (poly.is_empty()) throw MeasureError("InvalidInput", "piece is empty");

    // Sign certificate for pol >= 0 on the piece.
    bool ok = true;
    if (w.pol.is_zero()) ok = false;
    else if (w.pol.is_constant()) ok = w.pol.constant_term() > 0;
    else if (k == 1) {
        std::vector<Q> coeffs;
        for (auto& [e, v] : w.pol.t) {
            std::size_t d = e.empty() ? 0 : static_cast<std::size_t>(e[0]);
            if (coeffs.size() <= d) coeffs.resize(d + 1, Q(0));
            coeffs[d] += v;
        }
        std::optional<Q> lo, hi;
        for (std::size_t r = 0; r < poly.G.size(); ++r) {
            Q g = poly.G[r][0];
            if (g > 0) {
                Q v = poly.h[r] / g;
                if (!hi || v < *hi) hi = v;
            } else if (g < 0) {
                Q v = poly.h[r] / g;
                if (!lo || v > *lo) lo = v;
            }
        }
        ok = univariate_nonnegative(coeffs, lo, hi);
    } else {
        Rng rng(0x5eed);
        int accepted = 0;
        for (int tries = 0; tries < 200000 && accepted < 1000; ++tries) {
            std::vector<double> t(k);
            for (auto& x : t) x = rng.uniform(-50, 50);
            if (!poly.contains(t)) continue;
            ++accepted;
            if (w.pol.eval_d(t) < -1e-12) {
                ok = false;
                break;
            }
        }
    }
    if (!ok) throw MeasureError("SignCertificateFailed", "weight polynomial changes sign on the piece");

    Density d;
    d.stratum = stratum;
    d.A = std::move(A);
    d.b = std::move(b);
    d.poly = std::move(poly);
    d.w = std::move(w);
    d.coef = qabs(signed_coef);
    d.sign = signed_coef < 0 ? -1 : 1;
    d.pi_power = pi_power;
    return d;
}

Density lebesgue_box(int n, const std::vector<std::pair<std::optional<Q>, std::optional<Q>>>& box, const Q& c) {
    Mat<Q> A = zero_mat<Q>(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < A.size(); ++i) A[i][i] = 1;
    return make_density(n, 0, A, QVec(static_cast<std::size_t>(n), Q(0)), Polyhedron::box(box), Weight{}, c);
}

// ---------------------------------------------------------------- normal form

namespace {

// Remove redundant rows and bring rows into a canonical order.
Polyhedron canonical(const Polyhedron& p) {
    std::vector<std::pair<QVec, Q>> rows;
    for (std::size_t r = 0; r < p.G.size(); ++r) {
        QVec g = p.G[r];
        Q h = p.h[r];
        if (std::all_of(g.begin(), g.end(), [](const Q& x) { return x == 0; })) continue;
        normalize_row(g, h);
        rows.emplace_back(g, h);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return vec_less(a.first, b.first);
        return a.second < b.second;
    });
    std::vector<std::pair<QVec, Q>> uniq;
    for (auto& r : rows)
        if (uniq.empty() || uniq.back().first != r.first) uniq.push_back(r);
    // Drop rows implied by the others (LP over Q).
    std::size_t k = static_cast<std::size_t>(p.dim);
    for (std::size_t r = 0; r < uniq.size();) {
        std::size_t m = uniq.size() - 1;
        Mat<Q> a = zero_mat<Q>(m, 2 * k + m);
        QVec rhs(m);
        std::size_t row = 0;
        for (std::size_t s = 0; s < uniq.size(); ++s) {
            if (s == r) continue;
            for (std::size_t j = 0; j < k; ++j) {
                a[row][j] = uniq[s].first[j];
                a[row][k + j] = -uniq[s].first[j];
            }
            a[row][2 * k + row] = 1;
            rhs[row] = uniq[s].second;
            ++row;
        }
        QVec c(2 * k + m, Q(0));
        for (std::size_t j = 0; j < k; ++j) {
            c[j] = uniq[r].first[j];
            c[k + j] = -uniq[r].first[j];
        }
        bool redundant = false;
        if (m > 0) {
            auto res = lp_solve<Q>(a, rhs, c, Q(0));
            redundant = res.status == LpStatus::Optimal && res.objective <= uniq[r].second;
        }
        if (redundant) uniq.erase(uniq.begin() + static_cast<long>(r));
        else ++r;
    }
    Polyhedron out = Polyhedron::whole(p.dim);
    for (auto& [g, h] : uniq) out.add(g, h);
    return out;
}

bool weight_less(const Weight& a, const Weight& b) {
    if (a.pol.t != b.pol.t) return a.pol.t < b.pol.t;
    if (a.quad != b.quad) return mat_less(a.quad, b.quad);
    if (a.lin != b.lin) return vec_less(a.lin, b.lin);
    return a.cst < b.cst;
}

bool same_geometry(const Density& a, const Density& b) {
    return a.stratum == b.stratum && a.A == b.A && a.b == b.b && a.poly == b.poly && a.w == b.w &&
           a.pi_power == b.pi_power;
}

bool density_less(const Density& a, const Density& b) {
    if (a.stratum != b.stratum) return a.stratum < b.stratum;
    if (a.A != b.A) return mat_less(a.A, b.A);
    if (a.b != b.b) return vec_less(a.b, b.b);
    if (a.poly.G != b.poly.G) return mat_less(a.poly.G, b.poly.G);
    if (a.poly.h != b.poly.h) return vec_less(a.poly.h, b.poly.h);
    if (!(a.w == b.w)) return weight_less(a.w, b.w);
    return a.pi_power < b.pi_power;
}

bool atom_less(const Atom& a, const Atom& b) {
    if (a.pt.infinite != b.pt.infinite) return a.pt.infinite < b.pt.infinite;
    if (a.pt.u != b.pt.u) return vec_less(a.pt.u, b.pt.u);
    return a.pi_power < b.pi_power;
}

}  // namespace

void PieceMeasure::normalize() {
    for (auto& a : atoms)
        for (std::size_t i = 0; i < a.pt.u.size(); ++i)
            if ((a.pt.infinite >> i) & 1) a.pt.u[i] = 0;
    std::sort(atoms.begin(), atoms.end(), atom_less);
    std::vector<Atom> merged;
    for (auto& a : atoms) {
        if (!merged.empty() && !atom_less(merged.back(), a) && !atom_less(a, merged.back()))
            merged.back().w += a.w;
        else
            merged.push_back(a);
        if (merged.back().w == 0) merged.pop_back();
    }
    atoms = std::move(merged);

    std::vector<Density> ds;
    for (auto& d : densities) {
        Density c = d;
        c.poly = canonical(d.poly);
        // Scalar content of the weight polynomial moves into coef.
        if (!c.w.pol.is_zero()) {
            Q lead = qabs(c.w.pol.t.rbegin()->second);
            if (lead != 1) {
                c.w.pol = c.w.pol * Poly(Q(1) / lead);
                c.coef *= lead;
            }
        }
        if (c.coef != 0) ds.push_back(std::move(c));
    }
    std::sort(ds.begin(), ds.end(), density_less);
    std::vector<Density> out;
    for (auto& d : ds) {
        if (!out.empty() && same_geometry(out.back(), d)) {
            Q s = out.back().coef * out.back().sign + d.coef * d.sign;
            out.back().sign = s < 0 ? -1 : 1;
            out.back().coef = qabs(s);
        } else {
            out.push_back(d);
        }
        if (out.back().coef == 0) out.pop_back();
    }
    densities = std::move(out);
}

PieceMeasure& PieceMeasure::operator+=(const PieceMeasure& o) {
    if (n == 0) n = o.n;
    if (o.n != n && !o.is_zero()) throw MeasureError("InvalidInput", "measures on different charts");
    atoms.insert(atoms.end(), o.atoms.begin(), o.atoms.end());
    densities.insert(densities.end(), o.densities.begin(), o.densities.end());
    derivative_atoms.insert(derivative_atoms.end(), o.derivative_atoms.begin(), o.derivative_atoms.end());
    return *this;
}

bool same_pieces(PieceMeasure a, PieceMeasure b) {
    a.normalize();
    b.normalize();
    if (a.atoms.size() != b.atoms.size() || a.densities.size() != b.densities.size() ||
        a.derivative_atoms.size() != b.derivative_atoms.size())
        return false;
    for (std::size_t i = 0; i < a.atoms.size(); ++i)
        if (atom_less(a.atoms[i], b.atoms[i]) || atom_less(b.atoms[i], a.atoms[i]) || a.atoms[i].w != b.atoms[i].w)
            return false;
    for (std::size_t i = 0; i < a.densities.size(); ++i)
        if (!same_geometry(a.densities[i], b.densities[i]) || a.densities[i].coef != b.densities[i].coef ||
            a.densities[i].sign != b.densities[i].sign)
            return false;
    for (std::size_t i = 0; i < a.derivative_atoms.size(); ++i) {
        auto& x = a.derivative_atoms[i];
        auto& y = b.derivative_atoms[i];
        if (x.pt.infinite != y.pt.infinite || x.pt.u != y.pt.u || x.dir != y.dir || x.w != y.w) return false;
    }
    return true;
}

PieceMeasure scaled(const PieceMeasure& m, const Q& c, int pi_delta) {
    PieceMeasure out = m;
    if (c == 0) return PieceMeasure(m.n);
    for (auto& a : out.atoms) {
        a.w *= c;
        a.pi_power += pi_delta;
    }
    for (auto& d : out.densities) {
        d.coef *= qabs(c);
        if (c < 0) d.sign = -d.sign;
        d.pi_power += pi_delta;
    }
    for (auto& d : out.derivative_atoms) d.w *= c;
    return out;
}

// ---------------------------------------------------------------- integration

namespace {

std::vector<double> to_d(const QVec& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].get_d();
    return r;
}

// Piece domain intersected with the support box of f; nullopt when f vanishes on the piece.
std::optional<Polyhedron> piece_domain(const Density& d, const std::vector<std::pair<double, double>>& box) {
    Polyhedron dom = d.poly;
    for (std::size_t i = 0; i < box.size(); ++i) {
        auto [lo, hi] = box[i];
        if (!(lo < hi)) return std::nullopt;
        if ((d.stratum >> i) & 1) {
            if (hi < kInf) return std::nullopt;
            continue;
        }
        if (std::isfinite(hi)) dom.add(d.A[i], Q(hi) - d.b[i]);
        if (std::isfinite(lo)) {
            QVec g = d.A[i];
            for (auto& v : g) v = -v;
            dom.add(g, d.b[i] - Q(lo));
        }
    }
    if (dom.is_empty()) return std::nullopt;
    return dom;
}

// Intervals of an axis-aligned bounded box, when the polyhedron is one.
std::optional<std::vector<std::pair<Q, Q>>> as_box(const Polyhedron& p) {
    std::vector<std::optional<Q>> lo(static_cast<std::size_t>(p.dim)), hi(static_cast<std::size_t>(p.dim));
    for (std::size_t r = 0; r < p.G.size(); ++r) {
        int nz = -1;
        for (std::size_t j = 0; j < p.G[r].size(); ++j)
            if (p.G[r][j] != 0) {
                if (nz >= 0) return std::nullopt;
                nz = static_cast<int>(j);
            }
        if (nz < 0) continue;
        auto j = static_cast<std::size_t>(nz);
        Q v = p.h[r] / p.G[r][j];
        if (p.G[r][j] > 0) {
            if (!hi[j] || v < *hi[j]) hi[j] = v;
        } else if (!lo[j] || v > *lo[j]) {
            lo[j] = v;
        }
    }
    std::vector<std::pair<Q, Q>> out;
    for (std::size_t j = 0; j < lo.size(); ++j) {
        if (!lo[j] || !hi[j]) return std::nullopt;
        out.emplace_back(*lo[j], *hi[j]);
    }
    return out;
}

// Closed form for factor-free f and a linear exponent on a bounded box.
std::optional<double> closed_form(const CoefficientFn& f, const Density& d, const Polyhedron& dom) {
    if (f.has_factors() || d.w.has_quad()) return std::nullopt;
    auto box = as_box(dom);
    if (!box) return std::nullopt;
    std::size_t k = static_cast<std::size_t>(d.k());
    double total = 0;
    for (auto& t : f.terms()) {
        Poly p(t.c);
        QVec lam = d.w.lin;
        Q cst = d.w.cst;
        bool zero = false;
        for (std::size_t i = 0; i < t.a.size(); ++i) {
            if ((d.stratum >> i) & 1) {
                if (t.ell[i] < 0) zero = true;
                else if (t.ell[i] > 0 || t.a[i] > 0) throw MeasureError("Divergent", "test function unbounded at infinity");
                continue;
            }
            Poly ui(d.b[i]);
            for (std::size_t j = 0; j < k; ++j)
                if (d.A[i][j] != 0) ui += Poly(d.A[i][j]) * Poly::var(static_cast<int>(j));
            for (int e = 0; e < t.a[i]; ++e) p *= ui;
            for (std::size_t j = 0; j < k; ++j) lam[j] += t.ell[i] * d.A[i][j];
            cst += t.ell[i] * d.b[i];
        }
        if (zero) continue;
        p *= d.w.pol;
        double s = 0;
        for (auto& [e, v] : p.t) {
            double m = v.get_d();
            for (std::size_t j = 0; j < k; ++j) {
                int ej = j < e.size() ? e[j] : 0;
                m *= integral_monomial_exp(ej, lam[j].get_d(), (*box)[j].first.get_d(), (*box)[j].second.get_d());
            }
            s += m;
        }
        total += s * std::exp(cst.get_d());
    }
    return total;
}

// Axis-aligned frame, box domain and exponential-linear weight: every term of f factors into
// one-dimensional integrals over the piece parameters.
std::optional<double> separable(const CoefficientFn& f, const Density& d, const Polyhedron& dom) {
    if (d.w.has_quad() || !d.w.pol.is_constant()) return std::nullopt;
    std::size_t k = static_cast<std::size_t>(d.k());
    std::vector<int> axis_of(k, -1);
    for (std::size_t i = 0; i < d.A.size(); ++i) {
        if ((d.stratum >> i) & 1) continue;
        int nz = -1;
        for (std::size_t j = 0; j < k; ++j)
            if (d.A[i][j] != 0) {
                if (nz >= 0) return std::nullopt;
                nz = static_cast<int>(j);
            }
        if (nz < 0) continue;
        if (axis_of[static_cast<std::size_t>(nz)] >= 0) return std::nullopt;
        axis_of[static_cast<std::size_t>(nz)] = static_cast<int>(i);
    }
    std::vector<std::pair<double, double>> bounds(k, {-kInf, kInf});
    for (std::size_t r = 0; r < dom.G.size(); ++r) {
        int nz = -1;
        for (std::size_t j = 0; j < k; ++j)
            if (dom.G[r][j] != 0) {
                if (nz >= 0) return std::nullopt;
                nz = static_cast<int>(j);
            }
        if (nz < 0) continue;
        auto j = static_cast<std::size_t>(nz);
        double v = Q(dom.h[r] / dom.G[r][j]).get_d();
        if (dom.G[r][j] > 0) bounds[j].second = std::min(bounds[j].second, v);
        else bounds[j].first = std::max(bounds[j].first, v);
    }
    CoefficientFn g = f;
    for (int i : mask_elements(d.stratum)) {
        try {
            g = g.limit_at_infinity(i);
        } catch (const FieldError& e) {
            throw MeasureError("Divergent", e.what());
        }
    }
    auto factor_value = [](const Factor& fa, double x) {
        double y = fa.scale.get_d() * x + fa.shift.get_d();
        return fa.kind == FactorKind::Bump ? bump_derivative(fa.order, y) : step_derivative(fa.order, y);
    };
    double total = 0;
    for (auto& t : g.terms()) {
        double v = t.c.get_d() * d.w.pol.constant_term().get_d() * std::exp(d.w.cst.get_d());
        // Axes frozen at their offset.
        for (std::size_t i = 0; i < d.A.size() && v != 0; ++i) {
            if ((d.stratum >> i) & 1) continue;
            bool moving = std::any_of(axis_of.begin(), axis_of.end(), [&](int a) { return a == static_cast<int>(i); });
            if (moving) continue;
            double u = d.b[i].get_d();
            v *= std::pow(u, t.a[i]) * std::exp(t.ell[i].get_d() * u);
            for (auto& fa : t.factors)
                if (fa.axis == static_cast<int>(i)) v *= factor_value(fa, u);
        }
        for (std::size_t j = 0; j < k && v != 0; ++j) {
            auto [lo, hi] = bounds[j];
            if (!(lo < hi)) {
                v = 0;
                break;
            }
            double lam = d.w.lin.empty() ? 0.0 : d.w.lin[j].get_d();
            int ax = axis_of[j];
            if (ax < 0) {
                v *= integral_monomial_exp(0, lam, lo, hi);
                continue;
            }
            auto ai = static_cast<std::size_t>(ax);
            double A = d.A[ai][j].get_d(), b = d.b[ai].get_d(), ell = t.ell[ai].get_d();
            int deg = t.a[ai];
            std::vector<Factor> fs;
            for (auto& fa : t.factors)
                if (fa.axis == ax) fs.push_back(fa);
            auto h = [&](double x) {
                double u = A * x + b;
                double e = lam * x + ell * u;
                double r = std::pow(u, deg);
                for (auto& fa : fs) {
                    r *= factor_value(fa, u);
                    if (r == 0) return 0.0;
                }
                return r * std::exp(e);
            };
            double err = 0, l1 = 0;
            double w = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(h, lo, hi, 15, 1e-10, &err, &l1);
            if (!std::isfinite(w)) throw MeasureError("Divergent", "one-dimensional factor is not finite");
            if (err > 1e-9 * std::max(l1, 1e-12)) return std::nullopt;
            v *= w;
        }
        total += v;
    }
    return total;
}

}  // namespace

IntegrationResult integrate_against(const CoefficientFn& f, const PieceMeasure& mu, double tol, bool allow_non_measure) {
    IntegrationResult res;
    if (!mu.derivative_atoms.empty() && !allow_non_measure)
        throw MeasureError("NonMeasurePiece", "measure contains derivative atoms");
    for (auto& a : mu.atoms) res.value += a.w.get_d() * pi_factor(a.pi_power) * f.eval(to_d(a.pt.u), a.pt.infinite);
    for (auto& da : mu.derivative_atoms) {
        double dv = 0;
        for (std::size_t j = 0; j < da.dir.size(); ++j)
            if (da.dir[j] != 0) dv += da.dir[j].get_d() * f.derivative(static_cast<int>(j)).eval(to_d(da.pt.u), da.pt.infinite);
        res.value -= da.w.get_d() * dv;
        res.non_measure = true;
    }
    if (mu.densities.empty()) return res;
    auto box = f.support_box();
    double per_piece_tol = tol / static_cast<double>(mu.densities.size());
    for (std::size_t idx = 0; idx < mu.densities.size(); ++idx) {
        auto& d = mu.densities[idx];
        auto dom = piece_domain(d, box);
        if (!dom) continue;
        double scale = d.sign * d.coef.get_d() * pi_factor(d.pi_power);
        if (d.k() == 0) {
            res.value += scale * f.eval(d.point({}), d.stratum) * d.w.value({});
            continue;
        }
        auto rays = dom->recession_rays();
        if (!rays.empty()) {
            std::string why;
            if (auto r = failing_ray(rays, d.w.quad, d.w.lin, &why))
                throw MeasureError("Divergent", "piece " + std::to_string(idx) + " along ray " + vec_str(*r) + ": " + why);
        }
        if (auto cf = closed_form(f, d, *dom)) {
            res.value += scale * *cf;
            continue;
        }
        if (auto sv = separable(f, d, *dom)) {
            res.value += scale * *sv;
            continue;
        }
        Levels lv = fourier_motzkin(*dom);
        if (lv.empty) continue;
        std::vector<double> t(static_cast<std::size_t>(d.k()));
        auto integrand = [&](const std::vector<double>& tt) {
            double w = d.w.value(tt);
            if (w == 0) return 0.0;
            return f.eval(d.point(tt), d.stratum) * w;
        };
        double err = 0;
        double v = integrate_levels(lv, integrand, t, 0, 1e-10, &err);
        if (!std::isfinite(v)) throw MeasureError("Divergent", "piece " + std::to_string(idx) + " integral is not finite");
        if (err * std::abs(scale) > std::max(per_piece_tol, 1e-9 * std::abs(v * scale)))
            throw MeasureError("ToleranceNotMet", "quadrature error " + std::to_string(err * std::abs(scale)));
        res.value += scale * v;
    }
    return res;
}

std::pair<PieceMeasure, PieceMeasure> total_variation_decompose(const PieceMeasure& mu) {
    if (!mu.is_measure()) throw MeasureError("NonMeasurePiece", "measure contains derivative atoms");
    PieceMeasure pos(mu.n), neg(mu.n);
    for (auto& a : mu.atoms) {
        if (a.w > 0) pos.atoms.push_back(a);
        else if (a.w < 0) {
            Atom b = a;
            b.w = -a.w;
            neg.atoms.push_back(b);
        }
    }
    for (auto& d : mu.densities) {
        Density e = d;
        e.sign = 1;
        (d.sign > 0 ? pos : neg).densities.push_back(e);
    }
    return {pos, neg};
}

PieceMeasure total_variation(const PieceMeasure& mu) {
    auto [p, m] = total_variation_decompose(mu);
    return p + m;
}

double total_mass(const PieceMeasure& mu, double tol) {
    return integrate_against(CoefficientFn::constant(mu.n, 1), mu, tol).value;
}

PieceMeasure restrict_to_stratum(const PieceMeasure& mu, Mask stratum) {
    if (!mu.is_measure()) throw MeasureError("NonMeasurePiece", "measure contains derivative atoms");
    PieceMeasure out(mu.n);
    for (auto& a : mu.atoms)
        if (a.pt.infinite == stratum) out.atoms.push_back(a);
    for (auto& d : mu.densities)
        if (d.stratum == stratum) out.densities.push_back(d);
    return out;
}

PieceMeasure restrict_to_polyhedron(const PieceMeasure& mu, const Polyhedron& region) {
    if (!mu.is_measure()) throw MeasureError("NonMeasurePiece", "measure contains derivative atoms");
    if (region.dim != mu.n) throw MeasureError("InvalidInput", "region has wrong dimension");
    PieceMeasure out(mu.n);
    auto touches = [&](Mask m, std::size_t r) {
        for (int i : mask_elements(m))
            if (region.G[r][static_cast<std::size_t>(i)] != 0) return true;
        return false;
    };
    for (auto& a : mu.atoms) {
        bool in = true;
        for (std::size_t r = 0; r < region.G.size() && in; ++r) {
            if (touches(a.pt.infinite, r)) throw MeasureError("Unsupported", "region constrains an infinite axis");
            if (dot(region.G[r], a.pt.u) > region.h[r]) in = false;
        }
        if (in) out.atoms.push_back(a);
    }
    for (auto& d : mu.densities) {
        Density e = d;
        for (std::size_t r = 0; r < region.G.size(); ++r) {
            if (touches(d.stratum, r)) throw MeasureError("Unsupported", "region constrains an infinite axis");
            e.poly.add(row_times(region.G[r], d.A), region.h[r] - dot(region.G[r], d.b));
        }
        if (!e.poly.is_empty()) out.densities.push_back(std::move(e));
    }
    return out;
}

FinitenessResult local_finiteness(const PieceMeasure& mu, Mask chart_infinite, Mask forbidden,
                                  const std::optional<QVec>& extra, const std::vector<Mask>& excluded) {
    FinitenessResult res;
    for (std::size_t idx = 0; idx < mu.densities.size(); ++idx) {
        auto& d = mu.densities[idx];
        std::size_t k = static_cast<std::size_t>(d.k());
        if (k == 0) continue;
        QVec L = d.w.lin;
        if (extra) {
            QVec add = row_times(*extra, d.A);
            for (std::size_t j = 0; j < k; ++j) L[j] += add[j];
        }
        Mask free_axes = chart_infinite & ~d.stratum & ~forbidden;
        for (Mask mp = free_axes; mp; mp = (mp - 1) & free_axes) {
            Mask target = mp | d.stratum;
            if (std::any_of(excluded.begin(), excluded.end(), [&](Mask e) { return (e & ~target) == 0; })) continue;
            Mat<Q> E;
            Polyhedron cone = d.poly;
            for (std::size_t i = 0; i < static_cast<std::size_t>(mu.n); ++i) {
                if ((d.stratum >> i) & 1) continue;
                if ((mp >> i) & 1) {
                    QVec g = d.A[i];
                    for (auto& v : g) v = -v;
                    cone.add(g, Q(0));
                } else {
                    E.push_back(d.A[i]);
                }
            }
            auto rays = cone.recession_rays(E);
            std::string why;
            if (auto r = failing_ray(rays, d.w.quad, L, &why)) {
                res.ok = false;
                res.toward = d.stratum;
                for (int i : mask_elements(mp))
                    if (dot(d.A[static_cast<std::size_t>(i)], *r) > 0) res.toward |= Mask(1) << i;
                res.ray = *r;
                res.piece = idx;
                res.message = "piece " + std::to_string(idx) + " is not locally finite along " + vec_str(*r) + ": " + why;
                return res;
            }
        }
        // Directions that stay inside the finite part are harmless; the chart boundary is handled above.
    }
    return res;
}

PieceMeasure image_measure(const PieceMeasure& mu, const ImageMap& m) {
    if (!mu.is_measure()) throw MeasureError("NonMeasurePiece", "measure contains derivative atoms");
    switch (m.kind) {
        case ImageKind::OpenInclusion: {
            auto r = local_finiteness(mu, m.chart_infinite, m.forbidden);
            if (!r.ok) throw MeasureError("NotLocallyFinite", r.message);
            return mu;
        }
        case ImageKind::StratumInclusion:
            return mu;
        case ImageKind::CoordinateProjection: {
            PieceMeasure out(static_cast<int>(m.keep.size()));
            auto keep_mask = [&](Mask s) {
                Mask r = 0;
                for (std::size_t k = 0; k < m.keep.size(); ++k)
                    if ((s >> m.keep[k]) & 1) r |= Mask(1) << k;
                return r;
            };
            for (auto& a : mu.atoms) {
                QVec u;
                for (int i : m.keep) u.push_back(a.pt.u.at(static_cast<std::size_t>(i)));
                out.atoms.push_back({ChartPoint{keep_mask(a.pt.infinite), u}, a.w, a.pi_power});
            }
            for (auto& d : mu.densities) {
                Density e = d;
                e.A.clear();
                e.b.clear();
                for (int i : m.keep) {
                    e.A.push_back(d.A.at(static_cast<std::size_t>(i)));
                    e.b.push_back(d.b.at(static_cast<std::size_t>(i)));
                }
                e.stratum = keep_mask(d.stratum);
                Mat<Q> fin;
                for (std::size_t i = 0; i < e.A.size(); ++i)
                    if (!((e.stratum >> i) & 1)) fin.push_back(e.A[i]);
                if (d.k() > 0 && exact_rank(fin) != static_cast<std::size_t>(d.k()))
                    throw MeasureError("Unsupported", "projection collapses a density piece");
                out.densities.push_back(std::move(e));
            }
            return out;
        }
    }
    return mu;
}

std::string describe(const PieceMeasure& mu) {
    std::ostringstream os;
    os << mu.atoms.size() << " atoms, " << mu.densities.size() << " densities";
    if (!mu.derivative_atoms.empty()) os << ", " << mu.derivative_atoms.size() << " derivative atoms";
    return os.str();
}

}  // namespace trop
