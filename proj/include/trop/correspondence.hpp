#pragma once

#include "trop/currents.hpp"

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trop {

// Point mass of the complex co-coefficient S^{IJ} sitting on E^{I∪J}, where every shadow is blind.
struct KernelAtom {
    ChartPoint pt;
    Mask I = 0, J = 0;
    Q w = 1;
};

// S- and F-invariant complex current of bidegree (p,p) on trop^{-1}(U), stored by its shadows
// σ^{IJ}(f) = S^{IJ}(z^{-I} z̄^{-J} trop^*(f)).
struct InvariantComplexCurrent {
    int n = 0;
    int q = 0;
    OpenSet U;
    std::map<IndexPair, PieceMeasure> shadow;
    bool hermitian = true;
    std::vector<KernelAtom> kernel;
    std::string label;

    InvariantComplexCurrent() = default;
    InvariantComplexCurrent(OpenSet u, int q_) : n(u.n), q(q_), U(std::move(u)) {}

    int p() const { return n - q; }
    PieceMeasure shadow_of(Mask I, Mask J) const;
    void add(Mask I, Mask J, const PieceMeasure& m);
    void normalize();
    bool is_zero() const;  // as a current, kernel atoms included
};

bool same_shadows(const InvariantComplexCurrent& a, const InvariantComplexCurrent& b);

// Shadows avoid E^{I∪J}, stay in U, and σ^{IJ} ∏_{I} e^{-u_i} ∏_{J} e^{-u_j} is locally finite on U.
// Throws CurrentError("InvalidShadow").
void validate_shadow(const InvariantComplexCurrent& s);

// S(g) for an invariant test field of bidegree (q,q); the non-invariant part of g is averaged out.
std::complex<double> evaluate(const InvariantComplexCurrent& s, const InvariantComplexFormField& g, double tol);

// T^{IJ} = π^{-q} 4^{-q} σ^{IJ}; kernel atoms are dropped.
LagerbergCurrent push_forward(const InvariantComplexCurrent& s);

// Shadows π^q 4^q T_σ^{IJ} assembled over the canonical decomposition. Requires positivity and
// C-finite mass; throws NotPositive or NotCFinite.
InvariantComplexCurrent lift(const LagerbergCurrent& t);

struct RoundTripEntry {
    std::string label;
    bool exact = false;
    bool injective = false;  // lifts of two piece assemblies of T coincide
    std::string message;
};
struct RoundTripReport {
    bool ok = true;
    std::vector<RoundTripEntry> entries;
};
RoundTripReport round_trip_verify(const std::vector<LagerbergCurrent>& suite);

struct ComplexPositivity {
    Answer answer = Answer::Unknown;
    std::string reason;
    std::optional<IndexPair> asymmetric;
    std::optional<Estimate30Witness> estimate;  // on shadow entries
    std::optional<ChartPoint> where;            // point where the weighted matrix fails
    double min_eigenvalue = 0;                  // smallest over sampled points, relative to the matrix norm
    std::optional<InvariantComplexFormField> witness_form;
    double witness_value = 0;
};
ComplexPositivity complex_positivity_check(const InvariantComplexCurrent& s, int samples = 20, std::uint64_t seed = 1,
                                           double tol = 1e-9);

struct CompatCheck {
    std::string name;
    Answer passed = Answer::Unknown;
    std::string message;
};
std::vector<CompatCheck> compat_checks(const InvariantComplexCurrent& s);

// trop^*β ∧ S, computed with the sign rules of dz and dz̄ monomials.
InvariantComplexCurrent wedge_with_form(const LagerbergFormField& beta, const InvariantComplexCurrent& s);

// Top-degree (p = n) current whose shadow is the measure μ on U.
InvariantComplexCurrent haar_shadow(const PieceMeasure& mu, const OpenSet& U);
// Point mass at z = 0 of P^1 acting on (1,1)-forms: S(φ i dz∧dz̄) = φ(0).
InvariantComplexCurrent origin_point_mass_p1();

std::string describe(const InvariantComplexCurrent& s);

}  // namespace trop
