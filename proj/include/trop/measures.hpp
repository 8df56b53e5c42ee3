#pragma once

#include "trop/exterior.hpp"
#include "trop/fan_lattice.hpp"
#include "trop/form_field.hpp"
#include "trop/linalg.hpp"
#include "trop/poly.hpp"
#include "trop/rational.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trop {

struct MeasureError : std::runtime_error {
    std::string kind;
    MeasureError(std::string k, const std::string& msg) : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

// {t in R^dim : G t <= h}.
struct Polyhedron {
    int dim = 0;
    Mat<Q> G;
    QVec h;

    static Polyhedron whole(int dim) { return {dim, {}, {}}; }
    // Product of intervals; infinite ends given as nullopt.
    static Polyhedron box(const std::vector<std::pair<std::optional<Q>, std::optional<Q>>>& iv);
    void add(const QVec& g, const Q& rhs);
    bool contains(const std::vector<double>& t, double slack = 1e-12) const;
    bool contains(const QVec& t) const;
    bool is_empty() const;
    // Extreme rays of the recession cone intersected with {E v = 0}; lines appear in both directions.
    std::vector<QVec> recession_rays(const Mat<Q>& E = {}) const;
    friend bool operator==(const Polyhedron& a, const Polyhedron& b) { return a.dim == b.dim && a.G == b.G && a.h == b.h; }
};

// pol(t) * exp(t'Qt + lin.t + cst), with pol >= 0 on the piece.
struct Weight {
    Poly pol = Poly(1);
    Mat<Q> quad;  // symmetric, empty when zero
    QVec lin;
    Q cst = 0;

    bool has_quad() const;
    double exponent(const std::vector<double>& t) const;
    double value(const std::vector<double>& t) const { return pol.eval_d(t) * std::exp(exponent(t)); }
    friend bool operator==(const Weight& a, const Weight& b) {
        return a.pol == b.pol && a.quad == b.quad && a.lin == b.lin && a.cst == b.cst;
    }
};

// Density piece on the stratum where the axes of `stratum` are infinite: u = A t + b on the other
// axes (rows of stratum axes are zero), t ranging over `poly`; mass sign * coef * π^pi_power * w dt.
struct Density {
    Mask stratum = 0;
    Mat<Q> A;
    QVec b;
    Polyhedron poly;
    Weight w;
    Q coef = 1;  // >= 0
    int sign = 1;
    int pi_power = 0;
    int k() const { return poly.dim; }
    std::vector<double> point(const std::vector<double>& t) const;
};

struct Atom {
    ChartPoint pt;
    Q w;
    int pi_power = 0;
};

// Non-measure exemplar: f ↦ -w · (D_dir f)(pt).
struct DerivativeAtom {
    ChartPoint pt;
    QVec dir;
    Q w = 1;
};

struct PieceMeasure {
    int n = 0;
    std::vector<Atom> atoms;
    std::vector<Density> densities;
    std::vector<DerivativeAtom> derivative_atoms;

    PieceMeasure() = default;
    explicit PieceMeasure(int dim) : n(dim) {}

    bool is_zero() const { return atoms.empty() && densities.empty() && derivative_atoms.empty(); }
    bool is_measure() const { return derivative_atoms.empty(); }
    void normalize();
    PieceMeasure& operator+=(const PieceMeasure& o);
    friend PieceMeasure operator+(PieceMeasure a, const PieceMeasure& b) { return a += b; }
};

// Piece-data equality after normalization.
bool same_pieces(PieceMeasure a, PieceMeasure b);

// Validated density constructor: injective parametrization, nonempty piece, certified weight sign.
Density make_density(int n, Mask stratum, Mat<Q> A, QVec b, Polyhedron poly, Weight w, const Q& signed_coef,
                     int pi_power = 0);
// Lebesgue measure (coefficient c) on the box [lo_i, hi_i] of the dense stratum in the coordinates u.
Density lebesgue_box(int n, const std::vector<std::pair<std::optional<Q>, std::optional<Q>>>& box, const Q& c = 1);
Atom dirac(const ChartPoint& p, const Q& w);
ChartPoint finite_point(const QVec& u);

// Exact check that a univariate polynomial is >= 0 on (lo, hi) (unbounded when nullopt).
bool univariate_nonnegative(const std::vector<Q>& p, const std::optional<Q>& lo, const std::optional<Q>& hi);

PieceMeasure scaled(const PieceMeasure& m, const Q& c, int pi_delta = 0);

struct IntegrationResult {
    double value = 0;
    bool non_measure = false;  // derivative atoms contributed
};
IntegrationResult integrate_against(const CoefficientFn& f, const PieceMeasure& mu, double tol, bool allow_non_measure = false);

std::pair<PieceMeasure, PieceMeasure> total_variation_decompose(const PieceMeasure& mu);
PieceMeasure total_variation(const PieceMeasure& mu);
// Total mass (finite pieces only).
double total_mass(const PieceMeasure& mu, double tol);

// Keep pieces on the given stratum.
PieceMeasure restrict_to_stratum(const PieceMeasure& mu, Mask stratum);
// Intersect with {u : Gu <= h} on pieces of every stratum (rows of infinite axes must vanish).
PieceMeasure restrict_to_polyhedron(const PieceMeasure& mu, const Polyhedron& region);

struct FinitenessResult {
    bool ok = true;
    Mask toward = 0;          // boundary stratum approached
    std::optional<QVec> ray;  // witness ray in the piece parameters
    std::size_t piece = 0;
    std::string message;
};

// Local finiteness of each density near every boundary stratum M' ⊆ chart_infinite with M' ∩ forbidden = ∅,
// after multiplying the weight by exp(extra . u). Strata containing a mask of `excluded` are skipped.
FinitenessResult local_finiteness(const PieceMeasure& mu, Mask chart_infinite, Mask forbidden,
                                  const std::optional<QVec>& extra = std::nullopt,
                                  const std::vector<Mask>& excluded = {});

enum class ImageKind { OpenInclusion, StratumInclusion, CoordinateProjection };
struct ImageMap {
    ImageKind kind = ImageKind::OpenInclusion;
    Mask chart_infinite = 0;  // open inclusion: axes allowed to reach infinity in the target
    Mask forbidden = 0;       // open inclusion: boundary still excluded in the target
    std::vector<int> keep;    // coordinate projection: kept axes (0-based)
};
PieceMeasure image_measure(const PieceMeasure& mu, const ImageMap& m);

std::string describe(const PieceMeasure& mu);

}  // namespace trop
