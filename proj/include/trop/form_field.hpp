#pragma once

#include "trop/exterior.hpp"
#include "trop/fiber_algebra.hpp"
#include "trop/rational.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trop {

// b(x) = exp(-1/(1-x^2)) on (-1,1), zero elsewhere.
double bump_derivative(int order, double x);
// Smooth step: 0 for x <= -1, 1 for x >= 1, h(1+x)/(h(1+x)+h(1-x)) in between, h(y) = exp(-1/y).
double step_derivative(int order, double x);

// Integral of the canonical bump over (-1,1).
double bump_mass();

enum class FactorKind { Bump, Step };

// g^{(order)}(scale * u_axis + shift) with g the bump or the step.
struct Factor {
    int axis = 0;
    FactorKind kind = FactorKind::Bump;
    int order = 0;
    Q scale = 1;
    Q shift = 0;
    friend bool operator==(const Factor& a, const Factor& b) {
        return a.axis == b.axis && a.kind == b.kind && a.order == b.order && a.scale == b.scale && a.shift == b.shift;
    }
    friend bool operator<(const Factor& a, const Factor& b) {
        if (a.axis != b.axis) return a.axis < b.axis;
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.order != b.order) return a.order < b.order;
        if (a.scale != b.scale) return a.scale < b.scale;
        return a.shift < b.shift;
    }
};

struct Term {
    Q c;
    std::vector<int> a;    // polynomial exponents
    QVec ell;              // exponential rate
    std::vector<Factor> factors;  // kept sorted
};

struct FieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class CoefficientFn {
public:
    CoefficientFn() = default;
    explicit CoefficientFn(int n) : n_(n) {}

    static CoefficientFn constant(int n, const Q& c);
    static CoefficientFn monomial(int n, const std::vector<int>& a, const Q& c = 1);
    static CoefficientFn coordinate(int n, int axis);  // u_axis, 0-based
    static CoefficientFn exp_linear(int n, const QVec& ell, const Q& c = 1);
    // Bump with support (lo, hi) on one axis.
    static CoefficientFn bump(int n, int axis, const Q& lo, const Q& hi);
    // 0 for u <= lo, 1 for u >= hi (lo < hi); reversed when lo > hi.
    static CoefficientFn step(int n, int axis, const Q& lo, const Q& hi);
    // 1 on [lo, hi], support in (lo - margin, hi + margin).
    static CoefficientFn plateau(int n, int axis, const Q& lo, const Q& hi, const Q& margin);

    int dim() const { return n_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool has_factors() const;

    CoefficientFn& operator+=(const CoefficientFn& o);
    CoefficientFn& operator*=(const Q& s);
    friend CoefficientFn operator+(CoefficientFn a, const CoefficientFn& b) { return a += b; }
    friend CoefficientFn operator-(CoefficientFn a, const CoefficientFn& b) { return a += (-1) * b; }
    friend CoefficientFn operator*(const Q& s, CoefficientFn a) { return a *= s; }
    friend CoefficientFn operator*(const CoefficientFn& a, const CoefficientFn& b);
    friend bool operator==(const CoefficientFn& a, const CoefficientFn& b);

    CoefficientFn derivative(int axis) const;
    // Limit as u_axis -> +infinity; throws FieldError when it is not finite.
    CoefficientFn limit_at_infinity(int axis) const;

    // Value at u; axes in `infinite` are at +infinity.
    double eval(const std::vector<double>& u, Mask infinite = 0) const;

    // Closed axis-aligned box containing the support: {lo, hi} per axis, possibly infinite.
    std::vector<std::pair<double, double>> support_box() const;

    void add_term(Term t);
    std::string to_string() const;

private:
    int n_ = 0;
    std::vector<Term> terms_;
    void normalize();
};

// Complex coefficient re + i im.
struct CCoef {
    CoefficientFn re, im;
    CCoef() = default;
    explicit CCoef(int n) : re(n), im(n) {}
    CCoef(CoefficientFn r, CoefficientFn i) : re(std::move(r)), im(std::move(i)) {}
    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    CCoef& operator+=(const CCoef& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    // Multiply by a Gaussian rational.
    CCoef scaled(const QC& s) const;
    CCoef conj() const { return {re, Q(-1) * im}; }
    CCoef derivative(int axis) const { return {re.derivative(axis), im.derivative(axis)}; }
    friend bool operator==(const CCoef& a, const CCoef& b) { return a.re == b.re && a.im == b.im; }
};

// Lagerberg form field on a chart of R_inf^n: coefficients on d'u_I ∧ d''u_J (canonical order).
// Axes in `infinite` reach +infinity; near that boundary (u_i > threshold[i]) the field is declared
// compatible with its restriction to the boundary stratum.
struct LagerbergFormField {
    int n = 0;
    Mask infinite = 0;
    std::map<Mono, CoefficientFn> coeffs;
    std::vector<double> threshold;

    LagerbergFormField() = default;
    explicit LagerbergFormField(int dim, Mask inf = 0) : n(dim), infinite(inf), threshold(static_cast<std::size_t>(dim), 0.0) {}

    static LagerbergFormField from_form(const LForm& a, const CoefficientFn& f, Mask inf = 0);

    void add(Mono m, const CoefficientFn& f);
    std::pair<int, int> bidegree() const;
    bool is_zero() const { return coeffs.empty(); }
    LForm fiber_at(const std::vector<double>& u, Mask at_infinity = 0) const;
    // Restriction ω_M to the stratum where the axes of M are infinite.
    LagerbergFormField restrict_to_stratum(Mask m) const;
    friend bool operator==(const LagerbergFormField& a, const LagerbergFormField& b) {
        return a.n == b.n && a.coeffs == b.coeffs;
    }
};

struct MonomialPart {
    std::vector<int> z_exp, zbar_exp;
    Mono frame = 0;
    CCoef g;
};

// S-invariant complex field: coefficients g_{IK}(u) on i^{|K|} dz_I∧dz̄_K/(z_I z̄_K), times (√π)^sqrt_pi_power.
struct InvariantComplexFormField {
    int n = 0;
    Mask infinite = 0;
    std::map<Mono, CCoef> coeffs;
    int sqrt_pi_power = 0;
    std::vector<MonomialPart> monomial_part;

    InvariantComplexFormField() = default;
    explicit InvariantComplexFormField(int dim, Mask inf = 0) : n(dim), infinite(inf) {}

    void add(Mono m, const CCoef& g);
    std::pair<int, int> bidegree() const;
    // Fiber in the du, d(ubar) basis of the fiber algebra (du ↔ dz/z), without the π factor.
    CForm fiber_at(const std::vector<double>& u) const;
    friend bool operator==(const InvariantComplexFormField& a, const InvariantComplexFormField& b) {
        return a.n == b.n && a.sqrt_pi_power == b.sqrt_pi_power && a.coeffs == b.coeffs &&
               a.monomial_part.empty() && b.monomial_part.empty();
    }
};

enum class DiffKind { DPrime, DDoublePrime, Partial, IDbar };

LagerbergFormField differentiate(DiffKind k, const LagerbergFormField& a);
InvariantComplexFormField differentiate(DiffKind k, const InvariantComplexFormField& a);

LagerbergFormField wedge(const LagerbergFormField& a, const LagerbergFormField& b);
LagerbergFormField apply_J(const LagerbergFormField& a);
InvariantComplexFormField apply_F(const InvariantComplexFormField& a);
InvariantComplexFormField conjugate(const InvariantComplexFormField& a);
InvariantComplexFormField scaled(const InvariantComplexFormField& a, const QC& s);

InvariantComplexFormField trop_pullback_field(const LagerbergFormField& a);
// Inverse on F-invariant fields with the matching π power; nullopt otherwise.
std::optional<LagerbergFormField> trop_descend(const InvariantComplexFormField& s);
InvariantComplexFormField average_over_S(const InvariantComplexFormField& a);

enum class IntegrationSide { Tropical, Complex };
double integrate_top(const LagerbergFormField& a, double tol);
double integrate_top(const InvariantComplexFormField& a, double tol);

struct CompatibilityReport {
    bool ok = true;
    std::string message;
    Mask stratum = 0;
    Mono mono = 0;
    std::vector<double> witness;
};
CompatibilityReport check_compatibility(const LagerbergFormField& a, int samples, std::uint64_t seed = 1);

// ∫_a^b x^k e^{l x} dx in closed form (a, b finite).
double integral_monomial_exp(int k, double l, double a, double b);

// Adaptive nested Gauss-Kronrod over a box; error estimate returned through `err`.
double integrate_box(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<std::pair<double, double>>& box, double tol, double* err);

// Random field with bump factors, polynomial and exponential parts, supported in [-2,2]^n.
CoefficientFn random_bump_fn(Rng& rng, int n, int terms = 2);
LagerbergFormField random_field(Rng& rng, int n, int p, int q, int terms = 2);

}  // namespace trop
