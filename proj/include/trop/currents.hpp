#pragma once

#include "trop/fiber_algebra.hpp"
#include "trop/form_field.hpp"
#include "trop/measures.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace trop {

struct CurrentError : std::runtime_error {
    std::string kind;
    CurrentError(std::string k, const std::string& msg) : std::runtime_error(k + ": " + msg), kind(std::move(k)) {}
};

// Open subset of R_inf^n: the product of (lo_i, hi_i), where an unbounded axis in `infinite` also
// contains +infinity, minus the closures of the strata listed in `excluded`.
struct OpenSet {
    int n = 0;
    std::vector<std::optional<Q>> lo, hi;
    Mask infinite = 0;
    std::vector<Mask> excluded;

    static OpenSet whole(int n, Mask infinite = 0);
    // Stratum where the axes of s are infinite meets U.
    bool has_stratum(Mask s) const;
    bool contains(const ChartPoint& p) const;
    void validate() const;
};

using IndexPair = std::pair<Mask, Mask>;

// (-1)^{q(q-1)/2}.
int cocoef_sign(int q);

// A cell of a weighted complex: u = A t + b for t in `poly`; the columns of A form a basis of the
// lattice points of the cell's linear span.
struct Cell {
    Mat<Q> A;
    QVec b;
    Polyhedron poly;
    long weight = 1;
};

struct WeightedComplex {
    int n = 0;
    int dim = 0;
    std::vector<Cell> cells;
};

// Segment between two rational points, parametrized by the primitive direction.
Cell segment_cell(const QVec& from, const QVec& to, long weight = 1);
// Ray from `origin` along an integer direction (made primitive).
Cell ray_cell(const QVec& origin, const std::vector<long>& dir, long weight = 1);
void validate_complex(const WeightedComplex& c);

// Lagerberg current acting on (q,q) test forms through co-coefficients T^{IJ}, |I| = |J| = q.
struct LagerbergCurrent {
    int n = 0;
    int q = 0;
    OpenSet U;
    std::map<IndexPair, PieceMeasure> co;
    // Direct evaluation for currents outside the piece family; overrides co-coefficients.
    std::function<double(const LagerbergFormField&, double)> evaluator;
    std::string label;
    std::optional<WeightedComplex> complex;  // set for integration currents

    LagerbergCurrent() = default;
    LagerbergCurrent(OpenSet u, int q_) : n(u.n), q(q_), U(std::move(u)) {}

    int p() const { return n - q; }
    bool has_evaluator() const { return static_cast<bool>(evaluator); }
    PieceMeasure cocoef(Mask I, Mask J) const;
    void add(Mask I, Mask J, const PieceMeasure& m);
    void normalize();
    bool is_zero() const;
};

// Piece-data equality of co-coefficients.
bool same_current(const LagerbergCurrent& a, const LagerbergCurrent& b);
LagerbergCurrent operator+(const LagerbergCurrent& a, const LagerbergCurrent& b);
LagerbergCurrent scaled(const LagerbergCurrent& t, const Q& c, int pi_delta = 0);

// Pieces avoid E^{I∪J}, stay in U and are locally finite on U \ E^{I∪J}.
void validate(const LagerbergCurrent& t);

// T(α) for α of bidegree (q,q) with compact support in U.
double evaluate(const LagerbergCurrent& t, const LagerbergFormField& alpha, double tol, bool check_compat = false);
IntegrationResult evaluate_detail(const LagerbergCurrent& t, const LagerbergFormField& alpha, double tol);

// Seeded compactly supported test field of bidegree (p,q) on U, compatible near the boundary.
LagerbergFormField random_test_field(Rng& rng, const OpenSet& U, int p, int q, int terms = 1);
// f * (-1)^{q(q-1)/2} β∧Jβ with f >= 0 and β = Σ λ_I d'u_I over `indices`.
LagerbergFormField positive_test_field(const OpenSet& U, int q, const std::vector<Mask>& indices, const QVec& lambda,
                                       const CoefficientFn& f);
LagerbergFormField random_positive_test_field(Rng& rng, const OpenSet& U, int q);

struct ClosednessResult {
    Answer closed = Answer::Unknown;
    std::optional<bool> balanced;  // exact verdict for integration currents
    double max_residual = 0;       // max |T(dβ)| / scale over the pool
    std::optional<LagerbergFormField> witness;
    std::string message;
};
ClosednessResult closedness_test(const LagerbergCurrent& t, int count, double tol, std::uint64_t seed = 1);

// Co-coefficient entries sharing one geometry: an atom location, or a density piece with
// identical frame, domain and weight. `matrix` is indexed by `indices` on both sides.
struct CoGroup {
    bool atom = true;
    Atom atom_rep;
    Density density_rep;
    std::vector<Mask> indices;
    Mat<Q> matrix;
    bool isolated = true;  // mutually singular with every other group
};
std::vector<CoGroup> coefficient_groups(const std::map<IndexPair, PieceMeasure>& co);
// Some point of the support of a group.
ChartPoint group_point(const CoGroup& g, int n);

struct Estimate30Witness {
    Mask I = 0, J = 0;
    Q lambda_I, lambda_J;
    std::string where;
};

struct CurrentPositivity {
    Answer answer = Answer::Unknown;
    std::string reason;
    std::optional<IndexPair> asymmetric;
    std::optional<Estimate30Witness> estimate;
    std::vector<Mask> group_indices;  // failing matrix group
    QVec lambda;                      // λ with λ^T M λ < 0
    std::optional<LagerbergFormField> witness_form;
    double witness_value = 0;
};
CurrentPositivity positivity_check(const LagerbergCurrent& t, int samples = 20, std::uint64_t seed = 1, double tol = 1e-9);

// T = Σ_σ T_σ with T_σ concentrated on the stratum σ (a mask of infinite axes).
std::map<Mask, LagerbergCurrent> canonical_decomposition(const LagerbergCurrent& t, bool require_positive = true);

struct CFiniteResult {
    Answer answer = Answer::Unknown;
    Mask I = 0, J = 0;
    FinitenessResult detail;
    std::string message;
};
CFiniteResult c_finite_test(const LagerbergCurrent& t);

struct Extension {
    LagerbergCurrent current;
    ClosednessResult closed;
};
// Extends T from U \ E to U, where E is the union of the closures of `strata` (taken out of U.excluded).
Extension extend_by_zero(const LagerbergCurrent& t, const std::vector<Mask>& strata, int closed_samples = 20,
                         double tol = 1e-8, std::uint64_t seed = 1);

LagerbergCurrent integration_current(const WeightedComplex& c);

struct BalancingResult {
    bool balanced = true;
    std::optional<QVec> vertex;  // face where balancing fails
    QVec residual;
    std::string message;
};
BalancingResult balancing_check(const WeightedComplex& c);

// μ multiplied by a polynomial-exponential function (atoms and derivative atoms take any exact value).
PieceMeasure modulated(const PieceMeasure& mu, const CoefficientFn& c);

// β∧T for β of bidegree (p',p') with polynomial-exponential coefficients.
LagerbergCurrent wedge_with_form(const LagerbergFormField& beta, const LagerbergCurrent& t);

// Current [ω](α) = ∫ ω∧α of a constant form on R^n.
LagerbergCurrent form_current(const LForm& omega);
// (q = n) current f ↦ ∂f/∂dir at a finite point, given by a derivative atom.
LagerbergCurrent derivative_atom_current(int n, const QVec& point, const QVec& dir);

// n = 1 currents on U = (0, ∞] acting on (1,1) forms: density e^{u^2} and density e^{rate u}.
LagerbergCurrent gaussian_density_current();
LagerbergCurrent exponential_density_current(const Q& rate);
// n = 1 top-degree current f ↦ ∫_0^∞ e^{2e^u} f'(u) du on U = (0, ∞].
LagerbergCurrent double_exponential_evaluator_current();

// Seeded closed positive currents on R_inf^n with the given infinite axes: atoms and decaying
// densities for q = 0, constant PSD matrices times Lebesgue on strata for q >= 1, and balanced
// one-dimensional fans for n = 2, q = 1.
LagerbergCurrent random_closed_positive(Rng& rng, int n, int q, Mask infinite);
// Balanced one-dimensional fan in R^2 with `rays` rays through `apex`.
WeightedComplex random_balanced_fan(Rng& rng, int rays, const QVec& apex);
WeightedComplex tropical_line(const QVec& apex = {Q(0), Q(0)}, long w1 = 1, long w2 = 1, long w3 = 1);

std::string describe(const LagerbergCurrent& t);

}  // namespace trop
