#include "doctest.h"

#include "trop/currents.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace trop;

namespace {

PieceMeasure lebesgue(int n) {
    PieceMeasure m(n);
    std::vector<std::pair<std::optional<Q>, std::optional<Q>>> box(static_cast<std::size_t>(n));
    m.densities.push_back(lebesgue_box(n, box));
    return m;
}

CoefficientFn bumps_around(int n, const QVec& c, const Q& r) {
    CoefficientFn f = CoefficientFn::constant(n, 1);
    for (int i = 0; i < n; ++i) f = f * CoefficientFn::bump(n, i, c[static_cast<std::size_t>(i)] - r, c[static_cast<std::size_t>(i)] + r);
    return f;
}

LagerbergFormField top_field(int n, Mask inf, const CoefficientFn& f) {
    LagerbergFormField a(n, inf);
    Mask all = (Mask(1) << n) - 1;
    a.add(make_mono(all, all, n), f);
    return a;
}

}  // namespace

TEST_CASE("lebesgue measure on the unit interval integrates a plateau to one") {
    LagerbergCurrent t(OpenSet::whole(1), 1);
    PieceMeasure m(1);
    m.densities.push_back(lebesgue_box(1, {{Q(0), Q(1)}}));
    t.add(1, 1, m);
    validate(t);
    auto f = CoefficientFn::plateau(1, 0, Q(-1, 2), Q(3, 2), Q(1, 4));
    CHECK(evaluate(t, top_field(1, 0, f), 1e-12) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("gaussian density current") {
    auto t = gaussian_density_current();
    validate(t);

    SUBCASE("values on shrinking test forms exceed one") {
        for (int k = 2; k <= 4; ++k) {
            // e^{-k^2} rounded down keeps the value a lower bound.
            Q c(static_cast<long>(std::floor(std::exp(-k * k) * 1e9)), 1000000000L);
            auto f = CoefficientFn::constant(1, c) * CoefficientFn::plateau(1, 0, Q(k), Q(k) + Q(1, 2), Q(1, 4));
            double v = evaluate(t, top_field(1, 1, f), 1e-9);
            double lower = (std::exp(k) - 1) / (2.0 * k) * std::exp(-k * k) * c.get_d() / std::exp(-k * k);
            CHECK(v > 1.0);
            CHECK(v >= lower * (1 - 1e-6));
        }
    }
    SUBCASE("not closed") {
        auto r = closedness_test(t, 10, 1e-8, 3);
        CHECK(r.closed == Answer::No);
        CHECK(r.witness.has_value());
    }
    SUBCASE("not C-finite, with a ray toward infinity") {
        auto r = c_finite_test(t);
        CHECK(r.answer == Answer::No);
        CHECK(r.detail.toward == 1);
        REQUIRE(r.detail.ray.has_value());
        CHECK((*r.detail.ray)[0] > 0);
    }
    SUBCASE("positive") { CHECK(positivity_check(t).answer == Answer::Yes); }
}

TEST_CASE("exponential density at the critical rate") {
    auto t = exponential_density_current(Q(2));
    CHECK(c_finite_test(t).answer == Answer::No);

    LagerbergCurrent away = t;
    away.U.excluded = {1};
    validate(away);
    try {
        extend_by_zero(away, {1});
        FAIL("extension should be refused");
    } catch (const CurrentError& e) {
        CHECK(e.kind == "NotCFinite");
    }

    LagerbergCurrent slow = exponential_density_current(Q(1));
    CHECK(c_finite_test(slow).answer == Answer::Yes);
    slow.U.excluded = {1};
    auto ext = extend_by_zero(slow, {1}, 4);
    CHECK(ext.current.U.excluded.empty());
    CHECK(ext.closed.closed == Answer::No);
}

TEST_CASE("double exponential evaluator current") {
    auto t = double_exponential_evaluator_current();
    CHECK(closedness_test(t, 5, 1e-8).closed == Answer::Yes);

    // Independent value on a bump: integrate by parts numerically.
    auto f = CoefficientFn::bump(1, 0, Q(1, 2), Q(3, 2));
    LagerbergFormField a(1, 1);
    a.add(Mono(0), f);
    double v = evaluate(t, a, 1e-9);
    auto df = f.derivative(0);
    double oracle = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double x) { return std::exp(2 * std::exp(x)) * df.eval({x}); }, 0.5, 1.5, 20, 1e-13);
    CHECK(v == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(v < 0);

    auto pc = positivity_check(t, 20, 5);
    CHECK(pc.answer == Answer::No);
    REQUIRE(pc.witness_form.has_value());
    CHECK(pc.witness_value < 0);
}

TEST_CASE("current of the constant form from the fiber example") {
    auto t = form_current(omega_example());
    CHECK(t.q == 2);
    Mask s12 = 3, s13 = 5, s14 = 9, s23 = 6, s24 = 10, s34 = 12;
    PieceMeasure leb = lebesgue(4);
    PieceMeasure neg = scaled(leb, Q(-1));
    CHECK(same_pieces(t.cocoef(s34, s12), leb));
    CHECK(same_pieces(t.cocoef(s23, s14), leb));
    CHECK(same_pieces(t.cocoef(s24, s13), neg));
    for (Mask I : {s12, s13, s14, s23, s24, s34}) CHECK(t.cocoef(I, I).is_zero());

    auto pc = positivity_check(t);
    CHECK(pc.answer == Answer::No);
    CHECK_FALSE(pc.asymmetric.has_value());
    REQUIRE(pc.estimate.has_value());
    REQUIRE(pc.witness_form.has_value());
    CHECK(pc.witness_value < 0);
}

TEST_CASE("form times a derivative atom is not a measure") {
    auto d = derivative_atom_current(4, QVec(4, Q(0)), {Q(1), Q(0), Q(0), Q(0)});
    auto beta = LagerbergFormField::from_form(omega_example(), CoefficientFn::constant(4, 1));
    auto t = wedge_with_form(beta, d);
    CHECK(t.q == 2);
    auto mu = t.cocoef(12, 3);
    CHECK(!mu.is_measure());

    Rng rng(11);
    for (int k = 0; k < 5; ++k) {
        QVec c(4);
        for (auto& x : c) x = rng.small_rational(1, 4);
        auto f = bumps_around(4, c, Q(1)) * (CoefficientFn::constant(4, 1) + CoefficientFn::coordinate(4, 0));
        double expect = f.derivative(0).eval({0, 0, 0, 0});
        CHECK(integrate_against(f, mu, 1e-12, true).value == doctest::Approx(expect).epsilon(1e-10));
        LagerbergFormField a(4);
        a.add(make_mono(12, 3, 4), f);
        auto r = evaluate_detail(t, a, 1e-12);
        CHECK(r.non_measure);
        CHECK(r.value == doctest::Approx(cocoef_sign(2) * expect).epsilon(1e-10));
    }
    CHECK(positivity_check(t).answer == Answer::No);
}

TEST_CASE("segment current against one-dimensional quadrature") {
    WeightedComplex c{2, 1, {segment_cell({Q(0), Q(0)}, {Q(2), Q(1)}, 3)}};
    auto t = integration_current(c);
    Rng rng(5);
    for (int k = 0; k < 6; ++k) {
        QVec ctr{rng.small_rational(1, 2) + 1, rng.small_rational(1, 2) + Q(1, 2)};
        auto f = bumps_around(2, ctr, Q(3, 2)) * (CoefficientFn::constant(2, 2) + CoefficientFn::coordinate(2, 1));
        Mask I = rng.uniform_int(0, 1) ? 1 : 2, J = rng.uniform_int(0, 1) ? 1 : 2;
        LagerbergFormField a(2);
        a.add(make_mono(I, J, 2), f);
        double dI = I == 1 ? 2 : 1, dJ = J == 1 ? 2 : 1;
        double oracle = 3 * dI * dJ *
                        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                            [&](double s) { return f.eval({2 * s, s}); }, 0.0, 1.0, 20, 1e-13);
        CHECK(evaluate(t, a, 1e-11) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("tropical line") {
    auto c = tropical_line();
    CHECK(balancing_check(c).balanced);
    auto t = integration_current(c);
    validate(t);
    auto r = closedness_test(t, 100, 1e-8, 7);
    CHECK(r.closed == Answer::Yes);
    CHECK(r.balanced == std::optional<bool>(true));
    CHECK(r.max_residual < 1e-8);
    CHECK(positivity_check(t).answer == Answer::Yes);

    auto bad = tropical_line({Q(0), Q(0)}, 2, 1, 1);
    auto b = balancing_check(bad);
    CHECK_FALSE(b.balanced);
    REQUIRE(b.vertex.has_value());
    CHECK(b.residual == QVec{Q(-1), Q(0)});
    auto rb = closedness_test(integration_current(bad), 40, 1e-8, 7);
    CHECK(rb.closed == Answer::No);
    CHECK(rb.max_residual > 1e-3);
}

TEST_CASE("random balanced fans are balanced and closed") {
    Rng rng(17);
    for (int k = 0; k < 5; ++k) {
        auto c = random_balanced_fan(rng, 3 + k % 2, {Q(0), Q(1, 2)});
        CHECK(balancing_check(c).balanced);
        CHECK(closedness_test(integration_current(c), 15, 1e-8, static_cast<std::uint64_t>(k)).closed == Answer::Yes);
    }
}

TEST_CASE("validation rejects mass on the wrong strata") {
    LagerbergCurrent t(OpenSet::whole(1, 1), 1);
    PieceMeasure m(1);
    m.atoms.push_back(dirac(ChartPoint{1, {Q(0)}}, Q(1)));
    t.add(1, 1, m);
    CHECK_THROWS_AS(validate(t), CurrentError);

    OpenSet U = OpenSet::whole(1);
    U.lo[0] = Q(0);
    LagerbergCurrent s(U, 1);
    PieceMeasure w(1);
    w.densities.push_back(lebesgue_box(1, {{Q(-1), Q(1)}}));
    s.add(1, 1, w);
    CHECK_THROWS_AS(validate(s), CurrentError);
}

TEST_CASE("test forms must have support in U") {
    auto t = gaussian_density_current();
    auto f = CoefficientFn::bump(1, 0, Q(-1), Q(1));
    try {
        evaluate(t, top_field(1, 1, f), 1e-9);
        FAIL("support escapes U");
    } catch (const CurrentError& e) {
        CHECK(e.kind == "SupportEscapesU");
    }
}

TEST_CASE("canonical decomposition resums to the current with closed summands") {
    Rng rng(23);
    int checked = 0;
    for (int k = 0; k < 12; ++k) {
        int n = 1 + static_cast<int>(rng.uniform_int(0, 2));
        int q = static_cast<int>(rng.uniform_int(0, n));
        Mask inf = static_cast<Mask>(rng.uniform_int(0, (1L << n) - 1));
        auto t = random_closed_positive(rng, n, q, inf);
        auto parts = canonical_decomposition(t);
        LagerbergCurrent sum(t.U, t.q);
        for (auto& [s, part] : parts) {
            sum = sum + part;
            CHECK(closedness_test(part, 6, 1e-8, static_cast<std::uint64_t>(k)).closed == Answer::Yes);
        }
        CHECK(same_current(sum, t));
        ++checked;
    }
    CHECK(checked == 12);
}

TEST_CASE("J acts on the pairing by the sign (-1)^q") {
    Rng rng(29);
    for (int k = 0; k < 12; ++k) {
        int n = 1 + static_cast<int>(rng.uniform_int(0, 2));
        int q = static_cast<int>(rng.uniform_int(0, n));
        Mask inf = static_cast<Mask>(rng.uniform_int(0, (1L << n) - 1));
        auto t = random_closed_positive(rng, n, q, inf);
        auto a = random_test_field(rng, t.U, q, q);
        double v = evaluate(t, a, 1e-11);
        double w = evaluate(t, apply_J(a), 1e-11);
        double sign = q % 2 ? -1.0 : 1.0;
        CHECK(w == doctest::Approx(sign * v).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("closed positive currents in the random family are C-finite") {
    Rng rng(31);
    for (int k = 0; k < 15; ++k) {
        int n = 1 + static_cast<int>(rng.uniform_int(0, 2));
        int q = static_cast<int>(rng.uniform_int(0, n));
        Mask inf = static_cast<Mask>(rng.uniform_int(0, (1L << n) - 1));
        auto t = random_closed_positive(rng, n, q, inf);
        validate(t);
        CAPTURE(describe(t));
        CHECK(closedness_test(t, 8, 1e-8, static_cast<std::uint64_t>(k)).closed == Answer::Yes);
        CHECK(positivity_check(t, 8, static_cast<std::uint64_t>(k)).answer == Answer::Yes);
        CHECK(c_finite_test(t).answer == Answer::Yes);
    }
}

TEST_CASE("sums and scalings act linearly on evaluation") {
    Rng rng(37);
    auto a = random_closed_positive(rng, 2, 1, 0);
    auto b = random_closed_positive(rng, 2, 1, 0);
    auto alpha = random_test_field(rng, a.U, 1, 1);
    double va = evaluate(a, alpha, 1e-11), vb = evaluate(b, alpha, 1e-11);
    CHECK(evaluate(a + scaled(b, Q(3)), alpha, 1e-11) == doctest::Approx(va + 3 * vb).epsilon(1e-9));
}
