#include "trop/form_field.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

namespace trop {

namespace {

using Jet = std::vector<double>;

Jet jet_recip(const Jet& g) {
    Jet r(g.size(), 0.0);
    r[0] = 1.0 / g[0];
    for (std::size_t k = 1; k < g.size(); ++k) {
        double s = 0;
        for (std::size_t j = 1; j <= k; ++j) s += g[j] * r[k - j];
        r[k] = -s / g[0];
    }
    return r;
}

Jet jet_exp(const Jet& h) {
    Jet e(h.size(), 0.0);
    e[0] = std::exp(h[0]);
    for (std::size_t k = 1; k < h.size(); ++k) {
        double s = 0;
        for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * h[j] * e[k - j];
        e[k] = s / static_cast<double>(k);
    }
    return e;
}

Jet jet_mul(const Jet& a, const Jet& b) {
    Jet r(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; i + j < a.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

// exp(-1/y) expanded at y0 > 0 along y = y0 + dir * h.
Jet jet_h(double y0, double dir, int order) {
    Jet y(static_cast<std::size_t>(order) + 1, 0.0);
    y[0] = y0;
    if (order >= 1) y[1] = dir;
    Jet r = jet_recip(y);
    for (auto& v : r) v = -v;
    return jet_exp(r);
}

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

double qd(const Q& q) { return q.get_d(); }

bool term_key_less(const Term& a, const Term& b) {
    if (a.a != b.a) return a.a < b.a;
    if (a.ell != b.ell) return std::lexicographical_compare(a.ell.begin(), a.ell.end(), b.ell.begin(), b.ell.end());
    return std::lexicographical_compare(a.factors.begin(), a.factors.end(), b.factors.begin(), b.factors.end());
}
bool term_key_eq(const Term& a, const Term& b) {
    return a.a == b.a && a.ell == b.ell && a.factors == b.factors;
}

double factor_value(const Factor& f, double u) {
    double x = qd(f.scale) * u + qd(f.shift);
    return f.kind == FactorKind::Bump ? bump_derivative(f.order, x) : step_derivative(f.order, x);
}

// Interval of u where the factor can be nonzero.
std::pair<double, double> factor_support(const Factor& f) {
    const double inf = std::numeric_limits<double>::infinity();
    double s = qd(f.scale), t = qd(f.shift);
    double lo = (-1 - t) / s, hi = (1 - t) / s;
    if (lo > hi) std::swap(lo, hi);
    if (f.kind == FactorKind::Bump || f.order > 0) return {lo, hi};
    // Step of order zero is nonzero where x > -1.
    if (s > 0) return {(-1 - t) / s, inf};
    return {-inf, (-1 - t) / s};
}

}  // namespace

double bump_derivative(int order, double x) {
    if (x <= -1 || x >= 1) return 0.0;
    Jet g(static_cast<std::size_t>(order) + 1, 0.0);
    g[0] = 1 - x * x;
    if (order >= 1) g[1] = -2 * x;
    if (order >= 2) g[2] = -1;
    Jet r = jet_recip(g);
    for (auto& v : r) v = -v;
    Jet e = jet_exp(r);
    return e[static_cast<std::size_t>(order)] * factorial(order);
}

double step_derivative(int order, double x) {
    if (x <= -1) return 0.0;
    if (x >= 1) return order == 0 ? 1.0 : 0.0;
    Jet a = jet_h(1 + x, 1, order), b = jet_h(1 - x, -1, order);
    Jet s(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) s[k] = a[k] + b[k];
    Jet q = jet_mul(a, jet_recip(s));
    return q[static_cast<std::size_t>(order)] * factorial(order);
}

double bump_mass() {
    static const double m = [] {
        double err = 0;
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [](double x) { return bump_derivative(0, x); }, -1.0, 1.0, 12, 1e-13, &err);
    }();
    return m;
}

// ---------------------------------------------------------------- CoefficientFn

CoefficientFn CoefficientFn::constant(int n, const Q& c) {
    CoefficientFn f(n);
    f.add_term({c, std::vector<int>(static_cast<std::size_t>(n), 0), QVec(static_cast<std::size_t>(n), Q(0)), {}});
    return f;
}

CoefficientFn CoefficientFn::monomial(int n, const std::vector<int>& a, const Q& c) {
    CoefficientFn f(n);
    f.add_term({c, a, QVec(static_cast<std::size_t>(n), Q(0)), {}});
    return f;
}

CoefficientFn CoefficientFn::coordinate(int n, int axis) {
    std::vector<int> a(static_cast<std::size_t>(n), 0);
    a.at(static_cast<std::size_t>(axis)) = 1;
    return monomial(n, a);
}

CoefficientFn CoefficientFn::exp_linear(int n, const QVec& ell, const Q& c) {
    CoefficientFn f(n);
    f.add_term({c, std::vector<int>(static_cast<std::size_t>(n), 0), ell, {}});
    return f;
}

CoefficientFn CoefficientFn::bump(int n, int axis, const Q& lo, const Q& hi) {
    if (!(lo < hi)) throw FieldError("bump interval must satisfy lo < hi");
    Q scale = Q(2) / (hi - lo), shift = -(hi + lo) / (hi - lo);
    CoefficientFn f(n);
    f.add_term({Q(1), std::vector<int>(static_cast<std::size_t>(n), 0), QVec(static_cast<std::size_t>(n), Q(0)),
                {Factor{axis, FactorKind::Bump, 0, scale, shift}}});
    return f;
}

CoefficientFn CoefficientFn::step(int n, int axis, const Q& lo, const Q& hi) {
    if (lo == hi) throw FieldError("step interval is degenerate");
    Q scale = Q(2) / (hi - lo), shift = -(hi + lo) / (hi - lo);
    CoefficientFn f(n);
    f.add_term({Q(1), std::vector<int>(static_cast<std::size_t>(n), 0), QVec(static_cast<std::size_t>(n), Q(0)),
                {Factor{axis, FactorKind::Step, 0, scale, shift}}});
    return f;
}

CoefficientFn CoefficientFn::plateau(int n, int axis, const Q& lo, const Q& hi, const Q& margin) {
    return step(n, axis, lo - margin, lo) * step(n, axis, hi + margin, hi);
}

bool CoefficientFn::has_factors() const {
    return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) { return !t.factors.empty(); });
}

void CoefficientFn::add_term(Term t) {
    if (t.a.size() != static_cast<std::size_t>(n_) || t.ell.size() != static_cast<std::size_t>(n_))
        throw FieldError("DimensionMismatch: term has wrong number of variables");
    for (auto& f : t.factors)
        if (f.axis < 0 || f.axis >= n_ || f.scale == 0) throw FieldError("invalid factor");
    if (t.c == 0) return;
    std::sort(t.factors.begin(), t.factors.end());
    terms_.push_back(std::move(t));
    normalize();
}

void CoefficientFn::normalize() {
    std::sort(terms_.begin(), terms_.end(), term_key_less);
    std::vector<Term> out;
    for (auto& t : terms_) {
        if (!out.empty() && term_key_eq(out.back(), t))
            out.back().c += t.c;
        else
            out.push_back(t);
        if (out.back().c == 0) out.pop_back();
    }
    terms_ = std::move(out);
}

CoefficientFn& CoefficientFn::operator+=(const CoefficientFn& o) {
    if (o.is_zero()) return *this;
    if (n_ == 0 && terms_.empty()) n_ = o.n_;
    if (o.n_ != n_) throw FieldError("DimensionMismatch: coefficient functions in different dimensions");
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    normalize();
    return *this;
}

CoefficientFn& CoefficientFn::operator*=(const Q& s) {
    if (s == 0) {
        terms_.clear();
        return *this;
    }
    for (auto& t : terms_) t.c *= s;
    return *this;
}

CoefficientFn operator*(const CoefficientFn& a, const CoefficientFn& b) {
    if (a.is_zero() || b.is_zero()) return CoefficientFn(std::max(a.n_, b.n_));
    if (a.n_ != b.n_) throw FieldError("DimensionMismatch: coefficient functions in different dimensions");
    CoefficientFn out(a.n_);
    for (auto& x : a.terms_)
        for (auto& y : b.terms_) {
            Term t{x.c * y.c, x.a, x.ell, x.factors};
            for (std::size_t i = 0; i < t.a.size(); ++i) {
                t.a[i] += y.a[i];
                t.ell[i] += y.ell[i];
            }
            t.factors.insert(t.factors.end(), y.factors.begin(), y.factors.end());
            std::sort(t.factors.begin(), t.factors.end());
            out.terms_.push_back(std::move(t));
        }
    out.normalize();
    return out;
}

bool operator==(const CoefficientFn& a, const CoefficientFn& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t k = 0; k < a.terms_.size(); ++k)
        if (!term_key_eq(a.terms_[k], b.terms_[k]) || a.terms_[k].c != b.terms_[k].c) return false;
    return a.is_zero() || a.n_ == b.n_;
}

CoefficientFn CoefficientFn::derivative(int axis) const {
    CoefficientFn out(n_);
    auto ax = static_cast<std::size_t>(axis);
    for (auto& t : terms_) {
        if (t.a[ax] > 0) {
            Term d = t;
            d.c *= t.a[ax];
            d.a[ax] -= 1;
            out.terms_.push_back(std::move(d));
        }
        if (t.ell[ax] != 0) {
            Term d = t;
            d.c *= t.ell[ax];
            out.terms_.push_back(std::move(d));
        }
        for (std::size_t k = 0; k < t.factors.size(); ++k) {
            if (t.factors[k].axis != axis) continue;
            Term d = t;
            d.c *= t.factors[k].scale;
            d.factors[k].order += 1;
            std::sort(d.factors.begin(), d.factors.end());
            out.terms_.push_back(std::move(d));
        }
    }
    out.normalize();
    return out;
}

CoefficientFn CoefficientFn::limit_at_infinity(int axis) const {
    CoefficientFn out(n_);
    auto ax = static_cast<std::size_t>(axis);
    for (auto& t : terms_) {
        bool killed = false;
        Term r = t;
        r.factors.clear();
        for (auto& f : t.factors) {
            if (f.axis != axis) {
                r.factors.push_back(f);
                continue;
            }
            if (f.kind == FactorKind::Bump || f.order > 0 || f.scale < 0) killed = true;
        }
        if (killed) continue;
        if (t.ell[ax] < 0) continue;
        if (t.ell[ax] > 0 || t.a[ax] > 0)
            throw FieldError("coefficient has no finite limit at infinity along axis " + std::to_string(axis + 1));
        out.terms_.push_back(std::move(r));
    }
    out.normalize();
    return out;
}

double CoefficientFn::eval(const std::vector<double>& u, Mask infinite) const {
    double total = 0;
    for (auto& t : terms_) {
        double v = qd(t.c);
        bool zero = false;
        for (auto& f : t.factors) {
            if ((infinite >> f.axis) & 1) {
                if (f.kind == FactorKind::Bump || f.order > 0 || f.scale < 0) zero = true;
                continue;
            }
            v *= factor_value(f, u[static_cast<std::size_t>(f.axis)]);
            if (v == 0) zero = true;
        }
        if (zero) continue;
        double ex = 0;
        for (int i = 0; i < n_; ++i) {
            auto ii = static_cast<std::size_t>(i);
            if ((infinite >> i) & 1) {
                if (t.ell[ii] < 0) {
                    zero = true;
                    break;
                }
                if (t.ell[ii] > 0 || t.a[ii] > 0)
                    throw FieldError("coefficient has no finite limit at infinity along axis " + std::to_string(i + 1));
                continue;
            }
            if (t.a[ii]) v *= std::pow(u[ii], t.a[ii]);
            ex += qd(t.ell[ii]) * u[ii];
        }
        if (zero) continue;
        total += v * std::exp(ex);
    }
    return total;
}

std::vector<std::pair<double, double>> CoefficientFn::support_box() const {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> box(static_cast<std::size_t>(n_), {inf, -inf});
    for (auto& t : terms_) {
        std::vector<std::pair<double, double>> tb(static_cast<std::size_t>(n_), {-inf, inf});
        for (auto& f : t.factors) {
            auto [lo, hi] = factor_support(f);
            auto& iv = tb[static_cast<std::size_t>(f.axis)];
            iv.first = std::max(iv.first, lo);
            iv.second = std::min(iv.second, hi);
        }
        bool empty = std::any_of(tb.begin(), tb.end(), [](auto& iv) { return iv.first >= iv.second; });
        if (empty) continue;
        for (std::size_t i = 0; i < tb.size(); ++i) {
            box[i].first = std::min(box[i].first, tb[i].first);
            box[i].second = std::max(box[i].second, tb[i].second);
        }
    }
    for (auto& iv : box)
        if (iv.first > iv.second) iv = {0.0, 0.0};
    return box;
}

std::string CoefficientFn::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (auto& t : terms_) {
        if (!first) os << " + ";
        first = false;
        os << trop::to_string(t.c);
        for (int i = 0; i < n_; ++i)
            if (t.a[static_cast<std::size_t>(i)]) os << "*u" << i + 1 << "^" << t.a[static_cast<std::size_t>(i)];
        bool has_exp = std::any_of(t.ell.begin(), t.ell.end(), [](const Q& q) { return q != 0; });
        if (has_exp) {
            os << "*exp(";
            for (int i = 0; i < n_; ++i)
                if (t.ell[static_cast<std::size_t>(i)] != 0) os << "+" << trop::to_string(t.ell[static_cast<std::size_t>(i)]) << "*u" << i + 1;
            os << ")";
        }
        for (auto& f : t.factors)
            os << "*" << (f.kind == FactorKind::Bump ? "bump" : "step") << "^(" << f.order << ")("
               << trop::to_string(f.scale) << "*u" << f.axis + 1 << "+" << trop::to_string(f.shift) << ")";
    }
    return os.str();
}

CCoef CCoef::scaled(const QC& s) const {
    CoefficientFn r = s.re * re - s.im * im;
    CoefficientFn i = s.im * re + s.re * im;
    return {r, i};
}

// ---------------------------------------------------------------- Lagerberg fields

LagerbergFormField LagerbergFormField::from_form(const LForm& a, const CoefficientFn& f, Mask inf) {
    LagerbergFormField out(a.n, inf);
    for (auto& [m, v] : a.c) out.add(m, v * f);
    return out;
}

void LagerbergFormField::add(Mono m, const CoefficientFn& f) {
    if (f.is_zero()) return;
    if (f.dim() != n) throw FieldError("DimensionMismatch: coefficient dimension differs from the field");
    auto [it, fresh] = coeffs.try_emplace(m, f);
    if (!fresh) it->second += f;
    if (it->second.is_zero()) coeffs.erase(it);
}

std::pair<int, int> LagerbergFormField::bidegree() const {
    if (coeffs.empty()) return {-1, -1};
    int p = popcount(mono_i(coeffs.begin()->first, n)), q = popcount(mono_j(coeffs.begin()->first, n));
    for (auto& [m, f] : coeffs)
        if (popcount(mono_i(m, n)) != p || popcount(mono_j(m, n)) != q) throw FieldError("field is not bihomogeneous");
    return {p, q};
}

LForm LagerbergFormField::fiber_at(const std::vector<double>& u, Mask at_infinity) const {
    LForm out(n);
    for (auto& [m, f] : coeffs) out.add(m, Q(f.eval(u, at_infinity)));
    return out;
}

LagerbergFormField LagerbergFormField::restrict_to_stratum(Mask m) const {
    LagerbergFormField out(n, infinite);
    out.threshold = threshold;
    Mono both = make_mono(m, m, n);
    for (auto& [mono, f] : coeffs) {
        if (mono & both) continue;
        CoefficientFn g = f;
        for (int i : mask_elements(m)) g = g.limit_at_infinity(i);
        out.add(mono, g);
    }
    return out;
}

LagerbergFormField differentiate(DiffKind k, const LagerbergFormField& a) {
    if (k != DiffKind::DPrime && k != DiffKind::DDoublePrime)
        throw FieldError("WrongAlgebra: d' and d'' act on Lagerberg fields");
    LagerbergFormField out(a.n, a.infinite);
    out.threshold = a.threshold;
    for (auto& [m, f] : a.coeffs)
        for (int j = 0; j < a.n; ++j) {
            Mono gen = k == DiffKind::DPrime ? Mono(1) << j : Mono(1) << (a.n + j);
            int s = wedge_sign(gen, m);
            if (s == 0) continue;
            out.add(m | gen, Q(s) * f.derivative(j));
        }
    return out;
}

LagerbergFormField wedge(const LagerbergFormField& a, const LagerbergFormField& b) {
    if (a.n != b.n) throw FieldError("DimensionMismatch: fields in different dimensions");
    LagerbergFormField out(a.n, a.infinite | b.infinite);
    for (std::size_t i = 0; i < out.threshold.size(); ++i) out.threshold[i] = std::max(a.threshold[i], b.threshold[i]);
    for (auto& [ma, fa] : a.coeffs)
        for (auto& [mb, fb] : b.coeffs) {
            int s = wedge_sign(ma, mb);
            if (s == 0) continue;
            out.add(ma | mb, Q(s) * (fa * fb));
        }
    return out;
}

LagerbergFormField apply_J(const LagerbergFormField& a) {
    LagerbergFormField out(a.n, a.infinite);
    out.threshold = a.threshold;
    for (auto& [m, f] : a.coeffs) {
        Mask i = mono_i(m, a.n), j = mono_j(m, a.n);
        int s = (popcount(i) * popcount(j)) % 2 ? -1 : 1;
        out.add(make_mono(j, i, a.n), Q(s) * f);
    }
    return out;
}

// ---------------------------------------------------------------- invariant complex fields

void InvariantComplexFormField::add(Mono m, const CCoef& g) {
    if (g.is_zero()) return;
    auto [it, fresh] = coeffs.try_emplace(m, g);
    if (!fresh) it->second += g;
    if (it->second.is_zero()) coeffs.erase(it);
}

std::pair<int, int> InvariantComplexFormField::bidegree() const {
    if (coeffs.empty()) return {-1, -1};
    int p = popcount(mono_i(coeffs.begin()->first, n)), q = popcount(mono_j(coeffs.begin()->first, n));
    for (auto& [m, f] : coeffs)
        if (popcount(mono_i(m, n)) != p || popcount(mono_j(m, n)) != q) throw FieldError("field is not bihomogeneous");
    return {p, q};
}

CForm InvariantComplexFormField::fiber_at(const std::vector<double>& u) const {
    CForm out(n);
    for (auto& [m, g] : coeffs) {
        QC v(Q(g.re.eval(u)), Q(g.im.eval(u)));
        out.add(m, v * ipow(popcount(mono_j(m, n))));
    }
    return out;
}

InvariantComplexFormField differentiate(DiffKind k, const InvariantComplexFormField& a) {
    if (k != DiffKind::Partial && k != DiffKind::IDbar)
        throw FieldError("WrongAlgebra: the partial and i-dbar operators act on complex fields");
    InvariantComplexFormField out(a.n, a.infinite);
    out.sqrt_pi_power = a.sqrt_pi_power;
    for (auto& [m, g] : a.coeffs)
        for (int j = 0; j < a.n; ++j) {
            Mono gen = k == DiffKind::Partial ? Mono(1) << j : Mono(1) << (a.n + j);
            int s = wedge_sign(gen, m);
            if (s == 0) continue;
            out.add(m | gen, g.derivative(j).scaled(QC(Q(-s, 2))));
        }
    return out;
}

InvariantComplexFormField apply_F(const InvariantComplexFormField& a) {
    InvariantComplexFormField out = a;
    for (auto& [m, g] : out.coeffs) g = g.conj();
    for (auto& mp : out.monomial_part) {
        std::swap(mp.z_exp, mp.zbar_exp);
        mp.g = mp.g.conj();
    }
    return out;
}

InvariantComplexFormField conjugate(const InvariantComplexFormField& a) {
    InvariantComplexFormField out(a.n, a.infinite);
    out.sqrt_pi_power = a.sqrt_pi_power;
    for (auto& [m, g] : a.coeffs) {
        Mask i = mono_i(m, a.n), k = mono_j(m, a.n);
        int pi = popcount(i), pk = popcount(k);
        QC s = ipow(-(pi + pk));
        if ((pi * pk) % 2) s = -s;
        out.add(make_mono(k, i, a.n), g.conj().scaled(s));
    }
    return out;
}

InvariantComplexFormField scaled(const InvariantComplexFormField& a, const QC& s) {
    InvariantComplexFormField out(a.n, a.infinite);
    out.sqrt_pi_power = a.sqrt_pi_power;
    for (auto& [m, g] : a.coeffs) out.add(m, g.scaled(s));
    return out;
}

InvariantComplexFormField trop_pullback_field(const LagerbergFormField& a) {
    InvariantComplexFormField out(a.n, a.infinite);
    auto [p, q] = a.bidegree();
    if (p < 0) return out;
    int d = p + q;
    out.sqrt_pi_power = -d;
    Q c = Q(1, 1u << d);
    if (d % 2) c = -c;
    for (auto& [m, f] : a.coeffs) out.add(m, CCoef(c * f, CoefficientFn(a.n)));
    return out;
}

std::optional<LagerbergFormField> trop_descend(const InvariantComplexFormField& s) {
    LagerbergFormField out(s.n, s.infinite);
    if (!s.monomial_part.empty()) return std::nullopt;
    auto [p, q] = s.bidegree();
    if (p < 0) return out;
    int d = p + q;
    if (s.sqrt_pi_power != -d) return std::nullopt;
    Q c = Q(1u << d);
    if (d % 2) c = -c;
    for (auto& [m, g] : s.coeffs) {
        if (!g.im.is_zero()) return std::nullopt;
        out.add(m, c * g.re);
    }
    return out;
}

InvariantComplexFormField average_over_S(const InvariantComplexFormField& a) {
    InvariantComplexFormField out = a;
    out.monomial_part.clear();
    for (auto& mp : a.monomial_part) {
        if (mp.z_exp != mp.zbar_exp) continue;
        QVec ell(static_cast<std::size_t>(a.n));
        for (std::size_t i = 0; i < ell.size(); ++i) ell[i] = Q(-2 * mp.z_exp[i]);
        CoefficientFn e = CoefficientFn::exp_linear(a.n, ell);
        out.add(mp.frame, CCoef(mp.g.re * e, mp.g.im * e));
    }
    return out;
}

// ---------------------------------------------------------------- integration

namespace {

double integrate_nested(const std::function<double(const std::vector<double>&)>& f,
                        const std::vector<std::pair<double, double>>& box, std::vector<double>& x, std::size_t axis,
                        double tol, double* err) {
    if (axis == box.size()) return f(x);
    double e = 0;
    double inner_err_total = 0;
    auto g = [&](double t) {
        x[axis] = t;
        double ie = 0;
        double v = integrate_nested(f, box, x, axis + 1, tol, &ie);
        inner_err_total = std::max(inner_err_total, ie);
        return v;
    };
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, box[axis].first, box[axis].second, 15,
                                                                              tol * 1e-3, &e);
    double width = box[axis].second - box[axis].first;
    *err = e + inner_err_total * width;
    return v;
}

}  // namespace

double integrate_box(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<std::pair<double, double>>& box, double tol, double* err) {
    std::vector<double> x(box.size(), 0.0);
    double e = 0;
    double v = integrate_nested(f, box, x, 0, tol, &e);
    if (err) *err = e;
    return v;
}

double integral_monomial_exp(int k, double l, double a, double b) {
    if (l == 0) return (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
    // ∫ x^k e^{lx} = e^{lx} Σ_j (-1)^j k!/(k-j)! x^{k-j} / l^{j+1}
    auto prim = [&](double x) {
        double s = 0, coef = 1;
        for (int j = 0; j <= k; ++j) {
            s += ((j % 2) ? -1.0 : 1.0) * coef * std::pow(x, k - j) / std::pow(l, j + 1);
            coef *= (k - j);
        }
        return std::exp(l * x) * s;
    };
    return prim(b) - prim(a);
}

namespace {

std::vector<std::pair<double, double>> compact_box(const CoefficientFn& f) {
    auto box = f.support_box();
    for (auto& [lo, hi] : box)
        if (!std::isfinite(lo) || !std::isfinite(hi)) throw FieldError("NonCompactSupport: coefficient support is unbounded");
    return box;
}

void check_tol(double err, double tol) {
    if (!(err <= tol)) throw FieldError("ToleranceNotMet: quadrature error estimate " + std::to_string(err));
}

}  // namespace

double integrate_top(const LagerbergFormField& a, double tol) {
    if (a.is_zero()) return 0.0;
    auto [p, q] = a.bidegree();
    if (p != a.n || q != a.n) throw FieldError("integration needs an (n,n)-field");
    const CoefficientFn& f = a.coeffs.begin()->second;
    auto box = compact_box(f);
    double err = 0;
    double v = integrate_box([&](const std::vector<double>& u) { return f.eval(u); }, box, tol, &err);
    check_tol(err, tol);
    return interleave_sign(a.n) * v;
}

double integrate_top(const InvariantComplexFormField& a, double tol) {
    if (a.coeffs.empty()) return 0.0;
    auto [p, q] = a.bidegree();
    if (p != a.n || q != a.n) throw FieldError("integration needs an (n,n)-field");
    const CoefficientFn& g = a.coeffs.begin()->second.re;
    auto ubox = compact_box(g);
    // Polar coordinates z_k = r_k e^{iθ_k}, u_k = -log r_k; i dz∧dz̄ = 2 r dr dθ.
    std::vector<std::pair<double, double>> rbox;
    for (auto& [lo, hi] : ubox) rbox.emplace_back(std::exp(-hi), std::exp(-lo));
    std::vector<double> u(static_cast<std::size_t>(a.n));
    auto integrand = [&](const std::vector<double>& r) {
        double jac = 1;
        for (std::size_t k = 0; k < r.size(); ++k) {
            u[k] = -std::log(r[k]);
            jac *= 2.0 / r[k];
        }
        return g.eval(u) * jac;
    };
    double scale = std::pow(2 * std::numbers::pi, a.n) * std::pow(std::numbers::pi, a.sqrt_pi_power / 2.0) *
                   interleave_sign(a.n);
    double err = 0;
    double v = integrate_box(integrand, rbox, tol / std::abs(scale), &err);
    check_tol(err * std::abs(scale), tol);
    return scale * v;
}

// ---------------------------------------------------------------- compatibility

CompatibilityReport check_compatibility(const LagerbergFormField& a, int samples, std::uint64_t seed) {
    CompatibilityReport rep;
    Rng rng(seed);
    for (Mask m = 1; m < (Mask(1) << a.n); ++m) {
        if ((m & a.infinite) != m) continue;
        LagerbergFormField restricted;
        try {
            restricted = a.restrict_to_stratum(m);
        } catch (const FieldError& e) {
            rep.ok = false;
            rep.stratum = m;
            rep.message = std::string("CompatibilityViolation: ") + e.what();
            return rep;
        }
        Mono both = make_mono(m, m, a.n);
        for (int s = 0; s < samples; ++s) {
            std::vector<double> u(static_cast<std::size_t>(a.n));
            for (int i = 0; i < a.n; ++i) {
                auto ii = static_cast<std::size_t>(i);
                u[ii] = ((m >> i) & 1) ? a.threshold[ii] + rng.uniform(1e-3, 4.0) : rng.uniform(-10.0, 10.0);
            }
            for (auto& [mono, f] : a.coeffs) {
                double v = f.eval(u);
                double expect = 0;
                if (!(mono & both)) {
                    auto it = restricted.coeffs.find(mono);
                    if (it != restricted.coeffs.end()) expect = it->second.eval(u);
                }
                if (std::abs(v - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
                    rep.ok = false;
                    rep.stratum = m;
                    rep.mono = mono;
                    rep.witness = u;
                    rep.message = (mono & both) ? "CompatibilityViolation: coefficient indexed into an infinite axis "
                                                  "does not vanish near the boundary"
                                                : "CompatibilityViolation: field differs from the pullback of its "
                                                  "boundary restriction";
                    return rep;
                }
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------- random fields

CoefficientFn random_bump_fn(Rng& rng, int n, int terms) {
    CoefficientFn out(n);
    for (int t = 0; t < terms; ++t) {
        CoefficientFn f = CoefficientFn::constant(n, rng.small_rational(5, 3));
        for (int i = 0; i < n; ++i) {
            Q lo = qfrac(-static_cast<long>(rng.uniform_int(2, 8)), 4), hi = qfrac(static_cast<long>(rng.uniform_int(2, 8)), 4);
            f = f * CoefficientFn::bump(n, i, lo, hi);
        }
        std::vector<int> a(static_cast<std::size_t>(n));
        for (auto& e : a) e = static_cast<int>(rng.uniform_int(0, 2));
        QVec ell(static_cast<std::size_t>(n));
        for (auto& e : ell) e = rng.small_rational(1, 2);
        f = f * CoefficientFn::monomial(n, a) * CoefficientFn::exp_linear(n, ell);
        out += f;
    }
    return out;
}

LagerbergFormField random_field(Rng& rng, int n, int p, int q, int terms) {
    LagerbergFormField out(n);
    for (Mask i : subsets_of_size(n, p))
        for (Mask j : subsets_of_size(n, q))
            if (rng.uniform_int(0, 1)) out.add(make_mono(i, j, n), random_bump_fn(rng, n, terms));
    return out;
}

}  // namespace trop
