#include "doctest.h"

#include "trop/fiber_algebra.hpp"

#include <algorithm>

using namespace trop;

namespace {

// Independent sign oracle: bubble-sort a generator sequence, counting transpositions.
// Generators are encoded as 2k for d'u_k and 2k+1... no: as (family, index) with d' < d''.
int oracle_sign(std::vector<std::pair<int, int>> seq) {
    int sign = 1;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j)
            if (seq[i] == seq[j]) return 0;
    for (std::size_t pass = 0; pass < seq.size(); ++pass)
        for (std::size_t i = 0; i + 1 < seq.size(); ++i)
            if (seq[i + 1] < seq[i]) {
                std::swap(seq[i], seq[i + 1]);
                sign = -sign;
            }
    return sign;
}

std::vector<std::pair<int, int>> seq_of(Mono m, int n) {
    std::vector<std::pair<int, int>> s;
    for (int i : mask_elements(mono_i(m, n))) s.emplace_back(0, i);
    for (int j : mask_elements(mono_j(m, n))) s.emplace_back(1, j);
    return s;
}

// Brute-force wedge: concatenate generator sequences and sort.
LForm oracle_wedge(const LForm& a, const LForm& b) {
    int n = a.n;
    LForm out(n);
    for (auto& [ma, va] : a.c)
        for (auto& [mb, vb] : b.c) {
            auto s = seq_of(ma, n);
            auto t = seq_of(mb, n);
            s.insert(s.end(), t.begin(), t.end());
            int sg = oracle_sign(s);
            if (sg == 0) continue;
            out.add(ma | mb, va * vb * sg);
        }
    return out;
}

// Coefficient w_{ijkl} of d'u_i ∧ d''u_j ∧ d'u_k ∧ d''u_l.
Q word_coeff(const LForm& f, int i, int j, int k, int l) {
    LForm w = lword(4, {i, -j, k, -l});
    auto [m, s] = *w.c.begin();
    auto it = f.c.find(m);
    return it == f.c.end() ? Q(0) : it->second / s;
}

}  // namespace

TEST_CASE("wedge examples") {
    LForm a = lmono(2, {1}, {1}), b = lmono(2, {2}, {2});
    LForm al = lmono(2, {1, 2}, {});
    CHECK(wedge(a, b) == -wedge(al, apply_J(al)));
    CHECK(dual_pairing(a, b) == 1);
    CHECK_THROWS(wedge(LForm(2), LForm(3)));
}

TEST_CASE("wedge agrees with brute-force expansion and is graded commutative") {
    Rng rng(42);
    for (int t = 0; t < 300; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        int p1 = static_cast<int>(rng.uniform_int(0, n)), q1 = static_cast<int>(rng.uniform_int(0, n));
        int p2 = static_cast<int>(rng.uniform_int(0, n)), q2 = static_cast<int>(rng.uniform_int(0, n));
        LForm a = random_lform(rng, n, p1, q1), b = random_lform(rng, n, p2, q2);
        LForm ab = wedge(a, b);
        CHECK(ab == oracle_wedge(a, b));
        LForm ba = wedge(b, a);
        if (((p1 + q1) * (p2 + q2)) & 1) ba *= Q(-1);
        CHECK(ab == ba);
    }
}

TEST_CASE("J is the algebra involution swapping d' and d''") {
    CHECK(apply_J(lmono(2, {1}, {2})) == lmono(2, {2}, {1}, -1));
    CHECK(is_symmetric(lmono(1, {1}, {1})));
    CHECK(is_symmetric(tau(3)));
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        LForm a = random_lform(rng, n, static_cast<int>(rng.uniform_int(0, n)), static_cast<int>(rng.uniform_int(0, n)));
        LForm b = random_lform(rng, n, static_cast<int>(rng.uniform_int(0, n)), static_cast<int>(rng.uniform_int(0, n)));
        CHECK(apply_J(apply_J(a)) == a);
        CHECK(apply_J(wedge(a, b)) == wedge(apply_J(a), apply_J(b)));
    }
    CHECK_THROWS(apply_involution(Involution::F, lmono(2, {1}, {})));
    CHECK_THROWS(apply_involution(Involution::J, cmono(2, {1}, {})));
}

TEST_CASE("complex involutions") {
    QC i(0, 1);
    CHECK(apply_F(cmono(1, {1}, {1}, i)) == cmono(1, {1}, {1}, i));
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        int p = static_cast<int>(rng.uniform_int(0, n)), q = static_cast<int>(rng.uniform_int(0, n));
        CForm e = random_cform(rng, n, p, q);
        CHECK(apply_F(apply_F(e)) == e);
        CHECK(conjugate(conjugate(e)) == e);
        CForm lhs = conjugate(apply_F(e));
        CForm rhs = apply_F(conjugate(e));
        if ((p + q) & 1) rhs *= QC(-1);
        CHECK(lhs == rhs);
    }
    for (int k = 1; k <= 3; ++k) {
        CForm du = cmono(3, {k}, {}), dub = cmono(3, {}, {k});
        CHECK(apply_F(conjugate(du)) == -conjugate(apply_F(du)));
        CHECK(apply_F(conjugate(dub)) == -conjugate(apply_F(dub)));
    }
}

TEST_CASE("embedding") {
    QC i(0, 1);
    CForm w2 = wedge(wedge(wedge(cmono(2, {1}, {}), cmono(2, {}, {1}, i)), cmono(2, {2}, {})), cmono(2, {}, {2}, i));
    CHECK(embed_complex(tau(2)) == w2);
    CHECK(embed_complex(LForm(3)).is_zero());
    Rng rng(17);
    for (int t = 0; t < 200; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        int p = static_cast<int>(rng.uniform_int(0, n)), q = static_cast<int>(rng.uniform_int(0, n));
        LForm a = random_lform(rng, n, p, q), b = random_lform(rng, n, static_cast<int>(rng.uniform_int(0, n)), 0);
        CHECK(embed_complex(apply_J(a)) == ipow(p + q) * conjugate(embed_complex(a)));
        CHECK(embed_complex(wedge(a, b)) == wedge(embed_complex(a), embed_complex(b)));
        CHECK(apply_F(embed_complex(a)) == embed_complex(a));
        CHECK(*lagerberg_of(embed_complex(a)) == a);
    }
}

TEST_CASE("Gram forms") {
    auto g = gram_form(lmono(1, {1}, {1}));
    CHECK(g.m == Mat<Q>{{Q(1)}});
    Rng rng(23);
    for (int t = 0; t < 100; ++t) {
        int n = static_cast<int>(rng.uniform_int(2, 4));
        int p = static_cast<int>(rng.uniform_int(1, n));
        LForm alpha = form_from_plucker(n, p, random_qvec(rng, static_cast<int>(subsets_of_size(n, p).size())));
        if (alpha.is_zero()) continue;
        auto gm = gram_form(positive_square(alpha));
        auto ldl = exact_ldl(gm.m);
        CHECK(ldl.psd);
        CHECK(ldl.rank <= 1);
        // Outer product structure.
        QVec v = plucker_vector(alpha, p);
        for (std::size_t r = 0; r < v.size(); ++r)
            for (std::size_t c = 0; c < v.size(); ++c) CHECK(gm.m[r][c] == v[r] * v[c]);
    }
    for (int t = 0; t < 100; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        int p = static_cast<int>(rng.uniform_int(0, n));
        LForm a = random_lform(rng, n, p, p);
        LForm sym = a + (p % 2 ? Q(-1) : Q(1)) * apply_J(a);
        if (sym.is_zero()) continue;
        CHECK(gram_form(sym).self_adjoint);
        CForm c = random_cform(rng, n, p, p);
        CForm real = c + conjugate(c);
        if (real.is_zero()) continue;
        CHECK(gram_form(real).self_adjoint);
    }
}

TEST_CASE("the dimension-four examples") {
    LForm w = omega_example();
    CHECK(is_symmetric(w));
    auto g = gram_form(w);
    for (std::size_t k = 0; k < g.m.size(); ++k) CHECK(g.m[k][k] == 0);

    // Literal expansion of the F-average.
    LForm lit(4);
    lit += lword(4, {1, -1, 3, -3});
    lit += lword(4, {1, -1, 4, -4});
    lit += lword(4, {2, -2, 3, -3});
    lit += lword(4, {2, -2, 4, -4});
    lit -= lword(4, {1, -2, 3, -4});
    lit += lword(4, {2, -1, 3, -4});
    lit += lword(4, {1, -2, 4, -3});
    lit -= lword(4, {2, -1, 4, -3});
    LForm ex = omega_explicit();
    CHECK(ex == lit);
    LForm a1 = lmono(4, {1, 3}, {}) - lmono(4, {2, 4}, {});
    LForm a2 = lmono(4, {1, 4}, {}) + lmono(4, {2, 3}, {});
    CHECK(ex == -wedge(a1, apply_J(a1)) - wedge(a2, apply_J(a2)));
    auto gx = gram_form(ex);
    auto ldl = exact_ldl(gx.m);
    CHECK(ldl.psd);
    CHECK(ldl.rank == 2);
}

TEST_CASE("omega_example annihilates strong generators and the linear relation holds") {
    LForm w = omega_example();
    Rng rng(101);
    for (int t = 0; t < 300; ++t) {
        QVec a = random_qvec(rng, 4, 5, 3), b = random_qvec(rng, 4, 5, 3);
        LForm eta = strong_generator({a, b});
        CHECK(wedge(w, eta).is_zero());
        CHECK(word_coeff(eta, 1, 3, 2, 4) - word_coeff(eta, 1, 2, 3, 4) + word_coeff(eta, 1, 2, 4, 3) == 0);
    }
    CHECK(strong_pairing_polynomial(w).is_zero());
    CHECK(!strong_pairing_polynomial(tau(2) ).is_zero());
}

TEST_CASE("decomposable test") {
    CHECK(decomposable_test(lmono(4, {1, 2}, {})) == Answer::Yes);
    CHECK(decomposable_test(lmono(4, {1, 2}, {}) + lmono(4, {3, 4}, {})) == Answer::No);
    CHECK(decomposable_test(lmono(4, {1, 3}, {}) - lmono(4, {2, 4}, {})) == Answer::No);
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        int n = static_cast<int>(rng.uniform_int(3, 6));
        int p = static_cast<int>(rng.uniform_int(2, n - 1));
        std::vector<QVec> vs;
        for (int k = 0; k < p; ++k) vs.push_back(random_qvec(rng, n));
        CHECK(decomposable_test(decomposable(vs)) == Answer::Yes);
        // Plücker oracle for p = 2: α ∧ α = 0.
        if (p == 2) {
            LForm r = form_from_plucker(n, 2, random_qvec(rng, n * (n - 1) / 2));
            bool plucker = wedge(r, r).is_zero();
            CHECK((decomposable_test(r) == Answer::Yes) == plucker);
        }
    }
}

TEST_CASE("positivity verdicts") {
    LForm a = lmono(1, {1}, {1});
    for (Tier t : {Tier::Strong, Tier::Positive, Tier::Weak}) {
        auto v = positivity_verdict(a, t);
        CHECK(v.answer == Answer::Yes);
        CHECK(verify_verdict(a, v));
    }
    VerdictOptions opt;
    opt.pool_size = 2000;
    opt.vanishing_pairing_certificate = true;
    LForm w = omega_example();
    for (Q s : {Q(1), Q(-1)}) {
        LForm ws = s * w;
        auto vw = positivity_verdict(ws, Tier::Weak, opt);
        CHECK(vw.answer == Answer::Yes);
        CHECK(verify_verdict(ws, vw));
        auto vp = positivity_verdict(ws, Tier::Positive);
        CHECK(vp.answer == Answer::No);
        REQUIRE(vp.witness);
        CHECK(*vp.witness_pairing < 0);
        CHECK(verify_verdict(ws, vp));
    }
    VerdictOptions plain;
    plain.pool_size = 2000;
    CHECK(positivity_verdict(w, Tier::Weak, plain).answer == Answer::Unknown);

    LForm ex = omega_explicit();
    CHECK(positivity_verdict(ex, Tier::Positive).answer == Answer::Yes);
    auto vs = positivity_verdict(ex, Tier::Strong, opt);
    CHECK(vs.answer == Answer::No);
    REQUIRE(vs.plucker);
    CHECK(vs.plucker->range_basis.size() == 2);
    CHECK(verify_verdict(ex, vs));
}

TEST_CASE("strong tier finds decompositions with hints and coordinate generators") {
    Rng rng(77);
    VerdictOptions opt;
    opt.pool_size = 500;
    for (int t = 0; t < 5; ++t) {
        std::vector<QVec> f1 = {random_qvec(rng, 4), random_qvec(rng, 4)};
        std::vector<QVec> f2 = {random_qvec(rng, 4), random_qvec(rng, 4)};
        LForm target = positive_square(decomposable(f1)) + Q(2) * positive_square(decomposable(f2));
        opt.hints = {decomposable(f1), decomposable(f2)};
        auto v = positivity_verdict(target, Tier::Strong, opt);
        CHECK(v.answer == Answer::Yes);
        CHECK(verify_verdict(target, v));
    }
    LForm id(4);
    for (Mask k : subsets_of_size(4, 2)) id += positive_square(LForm::mono(4, k, 0, Q(1)));
    auto v = positivity_verdict(id, Tier::Strong, opt);
    CHECK(v.answer == Answer::Yes);
    CHECK(verify_verdict(id, v));
}

TEST_CASE("positive Lagerberg forms are exactly the positive complex forms") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 4));
        int p = static_cast<int>(rng.uniform_int(0, n));
        LForm a = rng.uniform_int(0, 1) ? random_positive(rng, n, p, 2)
                                        : random_positive(rng, n, p, 1) - random_positive(rng, n, p, 1);
        if (a.is_zero()) continue;
        auto lv = positivity_verdict(a, Tier::Positive);
        auto cv = positivity_verdict(embed_complex(a));
        CHECK(lv.answer == cv.answer);
        CHECK(verify_verdict(a, lv));
        CForm fa = apply_F(embed_complex(a));
        CHECK(positivity_verdict(fa).answer == cv.answer);
    }
}
