#pragma once

#include "trop/exterior.hpp"
#include "trop/linalg.hpp"
#include "trop/poly.hpp"
#include "trop/rational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace trop {

using LForm = Superform<Q>;   // Lagerberg form: x = d'u, y = d''u
using CForm = Superform<QC>;  // complex form: x = du, y = d(ubar)

// Builders with 1-based index lists, matching the JSON literal format.
LForm lmono(int n, const std::vector<int>& I, const std::vector<int>& J, const Q& c = 1);
CForm cmono(int n, const std::vector<int>& I, const std::vector<int>& K, const QC& c = 1);

// Product of degree-one generators in the listed order: k > 0 is d'u_k, k < 0 is d''u_{|k|}.
LForm lword(int n, const std::vector<int>& seq);
// Same for complex generators: k > 0 is du_k, k < 0 is d(ubar)_{|k|}.
CForm cword(int n, const std::vector<int>& seq);

LForm tau(int n);
CForm omega_n(int n);

// Degree-one Lagerberg form sum_k a_k d'u_k.
LForm d1(const QVec& a);
// a_1 ∧ ... ∧ a_p of (1,0)-forms.
LForm decomposable(const std::vector<QVec>& vs);

enum class Involution { J, Conjugation, F };

LForm apply_J(const LForm& a);
CForm conjugate(const CForm& a);
CForm apply_F(const CForm& a);
// J on Lagerberg forms; conjugation and F on complex forms. Throws WrongAlgebra otherwise.
LForm apply_involution(Involution k, const LForm& a);
CForm apply_involution(Involution k, const CForm& a);

CForm embed_complex(const LForm& a);
// Inverse of embed_complex on its image; nullopt when the form is not F-invariant.
std::optional<LForm> lagerberg_of(const CForm& a);

bool is_symmetric(const LForm& a);
bool is_real(const CForm& a);

template <class S>
struct GramForm {
    int p = 0;
    std::vector<Mask> index;  // p-subsets in lexicographic order
    Mat<S> m;
    bool self_adjoint = true;
};

// M_{KL} = (-1)^{p(p-1)/2} coeff_{KL}.
GramForm<Q> gram_form(const LForm& a);
// M_{KL} = (-1)^{p(p-1)/2} i^{-p} coeff_{KL}.
GramForm<QC> gram_form(const CForm& a);

// <a,b> with a ∧ b = <a,b> tau_n (resp. omega_n).
Q dual_pairing(const LForm& a, const LForm& b);
QC dual_pairing(const CForm& a, const CForm& b);

// (-1)^{p(p-1)/2} α ∧ Jα.
LForm positive_square(const LForm& alpha);
// a_1∧Ja_1∧...∧a_p∧Ja_p.
LForm strong_generator(const std::vector<QVec>& vs);

// Coefficient vector of a (p,0)-form over lexicographic p-subsets.
QVec plucker_vector(const LForm& alpha, int p);
LForm form_from_plucker(int n, int p, const QVec& v);

enum class Answer { Yes, No, Unknown };
std::string to_string(Answer a);

Answer decomposable_test(const LForm& alpha);

enum class Tier { Strong, Positive, Weak };
std::string to_string(Tier t);

struct DecompositionTerm {
    Q weight;      // lambda >= 0
    LForm alpha;   // decomposable (p,0)-form for strong certificates
};

struct PluckerWitness {
    std::vector<QVec> range_basis;  // basis of range(|a|) in Plücker coordinates
    std::vector<int> quadric;       // 1-based indices i<j<k<l of the violated-by-definiteness relation
    Mat<Q> restricted;              // quadric restricted to the range
};

struct PositivityVerdict {
    Tier tier = Tier::Positive;
    Answer answer = Answer::Unknown;
    std::string reason;
    std::vector<DecompositionTerm> certificate;  // Yes: a = sum weight * (-1)^{p(p-1)/2} α∧Jα
    std::optional<LForm> witness;                // No: dual form with negative pairing
    std::optional<Q> witness_pairing;
    std::optional<PluckerWitness> plucker;
    std::optional<std::pair<Mono, Mono>> asymmetry;  // No: coefficient pair violating Ja = (-1)^p a
};

struct VerdictOptions {
    std::size_t pool_size = 10000;
    std::uint64_t seed = 1;
    std::vector<LForm> hints;  // extra decomposable (p,0)-forms for the strong pool
    // Weak tier: exact dual argument requested by the caller. The pairing with the general
    // strongly positive generator is expanded symbolically and must vanish identically.
    bool vanishing_pairing_certificate = false;
};

PositivityVerdict positivity_verdict(const LForm& a, Tier tier, const VerdictOptions& opt = {});
// Positive tier on complex forms through the Hermitian Gram form.
PositivityVerdict positivity_verdict(const CForm& a);

// Exact re-verification of certificates and witnesses.
bool verify_verdict(const LForm& a, const PositivityVerdict& v);

// Symbolic <a, a_1∧Ja_1∧...∧a_q∧Ja_q> in the n*q entries of the a_k.
Poly strong_pairing_polynomial(const LForm& a);

// Seeded random forms.
LForm random_lform(Rng& rng, int n, int p, int q, long num = 5, long den = 3);
CForm random_cform(Rng& rng, int n, int p, int q, long num = 5, long den = 3);
QVec random_qvec(Rng& rng, int n, long num = 3, long den = 1);
// Random element of the positive cone: sum of k positive squares of random (p,0)-forms.
LForm random_positive(Rng& rng, int n, int p, int k = 2);

// The dimension-4 examples.
LForm omega_example();
CForm omega_explicit_complex();
LForm omega_explicit();

std::string to_string(const LForm& a);
std::string to_string(const CForm& a);

}  // namespace trop
