#include "doctest.h"

#include "trop/form_field.hpp"

#include <cmath>
#include <numbers>

using namespace trop;

namespace {

// Central finite difference of a scalar function, used as an independent derivative oracle.
template <class F>
double fd(F f, double x, int order, double h = 1e-3) {
    if (order == 0) return f(x);
    auto g = [&](double y) { return fd(f, y, order - 1, h); };
    return (g(x + h) - g(x - h)) / (2 * h);
}

LagerbergFormField field_of(const LForm& a, const CoefficientFn& f) { return LagerbergFormField::from_form(a, f); }

InvariantComplexFormField random_invariant(Rng& rng, int n, int p, int q) {
    InvariantComplexFormField out(n);
    for (Mask i : subsets_of_size(n, p))
        for (Mask k : subsets_of_size(n, q))
            if (rng.uniform_int(0, 1)) out.add(make_mono(i, k, n), CCoef(random_bump_fn(rng, n, 1), random_bump_fn(rng, n, 1)));
    return out;
}

}  // namespace

TEST_CASE("bump and step derivatives") {
    // Closed forms of the first two bump derivatives and the first step derivative.
    auto b0 = [](double x) { return std::exp(-1 / (1 - x * x)); };
    auto b1 = [&](double x) { return -2 * x / std::pow(1 - x * x, 2) * b0(x); };
    auto b2 = [&](double x) {
        double g = -2 * x / std::pow(1 - x * x, 2);
        double dg = -2 / std::pow(1 - x * x, 2) - 8 * x * x / std::pow(1 - x * x, 3);
        return (g * g + dg) * b0(x);
    };
    auto h = [](double y) { return std::exp(-1 / y); };
    auto s1 = [&](double x) {
        double a = h(1 + x), b = h(1 - x);
        return (a * b / std::pow(1 + x, 2) + a * b / std::pow(1 - x, 2)) / std::pow(a + b, 2);
    };
    for (double x : {-0.9, -0.3, 0.0, 0.41, 0.77}) {
        CHECK(bump_derivative(0, x) == doctest::Approx(b0(x)).epsilon(1e-14));
        CHECK(bump_derivative(1, x) == doctest::Approx(b1(x)).epsilon(1e-12));
        CHECK(bump_derivative(2, x) == doctest::Approx(b2(x)).epsilon(1e-12));
        CHECK(bump_derivative(3, x) == doctest::Approx(fd(b2, x, 1, 1e-6)).epsilon(1e-6));
        CHECK(step_derivative(0, x) + step_derivative(0, -x) == doctest::Approx(1.0));
        CHECK(step_derivative(1, x) == doctest::Approx(s1(x)).epsilon(1e-12));
        CHECK(step_derivative(2, x) == doctest::Approx(fd(s1, x, 1, 1e-6)).epsilon(1e-6));
        CHECK(step_derivative(3, x) == doctest::Approx(fd(s1, x, 2, 1e-4)).epsilon(1e-5));
    }
    CHECK(bump_derivative(2, 1.5) == 0.0);
    CHECK(step_derivative(0, 2.0) == 1.0);
    CHECK(step_derivative(1, 2.0) == 0.0);
    CHECK(bump_mass() == doctest::Approx(0.443993816168079).epsilon(1e-12));
}

TEST_CASE("coefficient functions") {
    auto u1 = CoefficientFn::coordinate(2, 0);
    auto f = u1 * u1 * CoefficientFn::exp_linear(2, {Q(1), Q(-2)});
    auto df = f.derivative(0);
    std::vector<double> u{0.7, -0.4};
    CHECK(df.eval(u) == doctest::Approx((2 * 0.7 + 0.7 * 0.7) * std::exp(0.7 + 0.8)));
    CHECK(f.derivative(1) == Q(-2) * f);
    CHECK((f - f).is_zero());
    auto b = CoefficientFn::bump(1, 0, Q(0), Q(2));
    CHECK(b.eval({1.0}) == doctest::Approx(std::exp(-1.0)));
    CHECK(b.support_box()[0] == std::pair<double, double>{0.0, 2.0});
    auto s = CoefficientFn::step(1, 0, Q(0), Q(1));
    CHECK(s.eval({0.0}) == 0.0);
    CHECK(s.eval({5.0}) == 1.0);
    CHECK(s.limit_at_infinity(0) == CoefficientFn::constant(1, 1));
    CHECK(s.eval({0.0}, 1) == 1.0);
    auto pl = CoefficientFn::plateau(1, 0, Q(2), Q(3), Q(1));
    CHECK(pl.eval({2.5}) == 1.0);
    CHECK(pl.eval({0.9}) == 0.0);
    CHECK_THROWS_AS(CoefficientFn::exp_linear(1, {Q(1)}).limit_at_infinity(0), FieldError);
    CHECK(CoefficientFn::exp_linear(1, {Q(-2)}).limit_at_infinity(0).is_zero());
}

TEST_CASE("symbolic derivative agrees with finite differences") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        auto f = random_bump_fn(rng, 2, 2);
        std::vector<double> u{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        for (int j = 0; j < 2; ++j) {
            auto g = [&](double y) {
                auto v = u;
                v[static_cast<std::size_t>(j)] = y;
                return f.eval(v);
            };
            CHECK(f.derivative(j).eval(u) == doctest::Approx(fd(g, u[static_cast<std::size_t>(j)], 1, 1e-5)).epsilon(1e-5).scale(1));
        }
    }
}

TEST_CASE("Lagerberg differentials") {
    auto w = field_of(lmono(2, {2}, {}), CoefficientFn::coordinate(2, 0));
    auto dw = differentiate(DiffKind::DPrime, w);
    CHECK(dw == field_of(lmono(2, {1, 2}, {}), CoefficientFn::constant(2, 1)));
    CHECK_THROWS(differentiate(DiffKind::Partial, w));
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 3));
        auto a = random_field(rng, n, static_cast<int>(rng.uniform_int(0, n)), static_cast<int>(rng.uniform_int(0, n)), 1);
        auto d1 = [](const LagerbergFormField& x) { return differentiate(DiffKind::DPrime, x); };
        auto d2 = [](const LagerbergFormField& x) { return differentiate(DiffKind::DDoublePrime, x); };
        CHECK(d1(d1(a)).is_zero());
        CHECK(d2(d2(a)).is_zero());
        auto anti = d1(d2(a));
        for (auto& [m, f] : d2(d1(a)).coeffs) anti.add(m, f);
        CHECK(anti.is_zero());
    }
}

TEST_CASE("trop pullback normalizations") {
    auto f = CoefficientFn::bump(1, 0, Q(0), Q(1));
    auto s = trop_pullback_field(field_of(lmono(1, {1}, {1}), f));
    CHECK(s.sqrt_pi_power == -2);
    REQUIRE(s.coeffs.size() == 1);
    CHECK(s.coeffs.begin()->second == CCoef(Q(1, 4) * f, CoefficientFn(1)));

    auto phi = CoefficientFn::coordinate(2, 1);
    auto s0 = trop_pullback_field(field_of(LForm::unit(2), phi));
    CHECK(s0.sqrt_pi_power == 0);
    CHECK(s0.coeffs.begin()->second.re == phi);

    for (int n = 1; n <= 3; ++n) {
        auto g = CoefficientFn::constant(n, 3);
        auto st = trop_pullback_field(field_of(tau(n), g));
        CHECK(st.sqrt_pi_power == -2 * n);
        CHECK(st.coeffs.at(top_mono(n)).re == Q(3 * interleave_sign(n), 1u << (2 * n)) * CoefficientFn::constant(n, 1));
    }
}

TEST_CASE("trop pullback intertwines differentials, J and conjugation") {
    Rng rng(21);
    for (int t = 0; t < 25; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 3));
        int p = static_cast<int>(rng.uniform_int(0, n)), q = static_cast<int>(rng.uniform_int(0, n));
        auto a = random_field(rng, n, p, q, 1);
        if (a.is_zero()) continue;
        auto ta = trop_pullback_field(a);
        auto lhs = trop_pullback_field(differentiate(DiffKind::DPrime, a));
        auto rhs = differentiate(DiffKind::Partial, ta);
        rhs.sqrt_pi_power -= 1;
        if (!lhs.coeffs.empty()) CHECK(lhs == rhs);
        auto lhs2 = trop_pullback_field(differentiate(DiffKind::DDoublePrime, a));
        auto rhs2 = differentiate(DiffKind::IDbar, ta);
        rhs2.sqrt_pi_power -= 1;
        if (!lhs2.coeffs.empty()) CHECK(lhs2 == rhs2);
        CHECK(trop_pullback_field(apply_J(a)) == scaled(conjugate(ta), ipow(p + q)));
        CHECK(apply_F(ta) == ta);
        auto back = trop_descend(ta);
        REQUIRE(back);
        CHECK(*back == a);
    }
}

TEST_CASE("F commutes with the complex differentials on invariant fields") {
    Rng rng(31);
    for (int t = 0; t < 25; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 3));
        auto s = random_invariant(rng, n, static_cast<int>(rng.uniform_int(0, n)), static_cast<int>(rng.uniform_int(0, n)));
        for (DiffKind k : {DiffKind::Partial, DiffKind::IDbar})
            CHECK(apply_F(differentiate(k, s)) == differentiate(k, apply_F(s)));
        CHECK(differentiate(DiffKind::Partial, differentiate(DiffKind::Partial, s)).coeffs.empty());
        CHECK(apply_F(apply_F(s)) == s);
        CHECK(conjugate(conjugate(s)) == s);
        bool has_im = false;
        for (auto& [m, g] : s.coeffs) has_im = has_im || !g.im.is_zero();
        if (has_im) CHECK(!trop_descend(s));
    }
}

TEST_CASE("fiberwise J/F compatibility through the fiber algebra") {
    Rng rng(41);
    for (int t = 0; t < 20; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 3));
        int p = static_cast<int>(rng.uniform_int(0, n)), q = static_cast<int>(rng.uniform_int(0, n));
        auto a = random_field(rng, n, p, q, 1);
        std::vector<double> u(static_cast<std::size_t>(n));
        for (auto& x : u) x = rng.uniform(-0.4, 0.4);
        LForm fib = a.fiber_at(u);
        CForm cf = trop_pullback_field(a).fiber_at(u);
        // The pullback fiber is the embedding scaled by (-1/2)^{p+q}.
        Q c = Q(1, 1u << (p + q));
        if ((p + q) % 2) c = -c;
        CHECK(cf == QC(c) * embed_complex(fib));
        CHECK(trop_pullback_field(apply_J(a)).fiber_at(u) == QC(c) * embed_complex(apply_J(fib)));
    }
}

TEST_CASE("averaging over the compact torus") {
    InvariantComplexFormField s(2);
    MonomialPart keep{{1, 0}, {1, 0}, make_mono(1, 1, 2), CCoef(CoefficientFn::constant(2, 1), CoefficientFn(2))};
    MonomialPart drop{{1, 0}, {0, 0}, make_mono(1, 1, 2), CCoef(CoefficientFn::constant(2, 1), CoefficientFn(2))};
    s.monomial_part = {keep, drop};
    auto av = average_over_S(s);
    REQUIRE(av.coeffs.size() == 1);
    CHECK(av.coeffs.begin()->second.re == CoefficientFn::exp_linear(2, {Q(-2), Q(0)}));
    CHECK(average_over_S(av) == av);
    InvariantComplexFormField only_drop(2);
    only_drop.monomial_part = {drop};
    CHECK(average_over_S(only_drop).coeffs.empty());
}

TEST_CASE("top-degree integration") {
    auto b = CoefficientFn::bump(1, 0, Q(0), Q(1));
    auto w = field_of(lmono(1, {1}, {1}), b);
    CHECK(integrate_top(w, 1e-10) == doctest::Approx(0.2219969080840395).epsilon(1e-10));
    CHECK(integrate_top(LagerbergFormField(2), 1e-8) == 0.0);
    CHECK_THROWS_AS(integrate_top(field_of(lmono(1, {1}, {1}), CoefficientFn::constant(1, 1)), 1e-8), FieldError);

    Rng rng(51);
    for (int t = 0; t < 3; ++t) {
        auto f = random_bump_fn(rng, 2, 2);
        auto a = field_of(tau(2), f);
        double tol = 1e-6;
        double trop_side = integrate_top(a, tol);
        double cplx_side = integrate_top(trop_pullback_field(a), tol);
        CHECK(std::abs(trop_side - cplx_side) <= 2 * tol);
    }
}

TEST_CASE("closed-form monomial-exponential integrals") {
    Rng rng(61);
    for (int t = 0; t < 20; ++t) {
        int k = static_cast<int>(rng.uniform_int(0, 4));
        double l = rng.uniform(-2, 2), a = rng.uniform(-2, 0), b = rng.uniform(0, 2);
        double err = 0;
        double q = integrate_box([&](const std::vector<double>& x) { return std::pow(x[0], k) * std::exp(l * x[0]); },
                                 {{a, b}}, 1e-12, &err);
        CHECK(integral_monomial_exp(k, l, a, b) == doctest::Approx(q).epsilon(1e-9));
    }
    CHECK(integral_monomial_exp(0, 0.0, 0, 1) == 1.0);
}

TEST_CASE("boundary compatibility") {
    // Constant toward the boundary.
    LagerbergFormField ok(1, 1);
    ok.add(0, CoefficientFn::step(1, 0, Q(0), Q(1)) * CoefficientFn::coordinate(1, 0) +
                  CoefficientFn::step(1, 0, Q(-1), Q(-2)));
    ok.coeffs.clear();
    ok.add(0, CoefficientFn::step(1, 0, Q(0), Q(1)));
    ok.threshold = {1.0};
    CHECK(check_compatibility(ok, 50).ok);

    LagerbergFormField decay(1, 1);
    decay.add(0, CoefficientFn::exp_linear(1, {Q(-2)}));
    decay.threshold = {3.0};
    auto r = check_compatibility(decay, 50);
    CHECK(!r.ok);
    CHECK(r.witness.size() == 1);

    LagerbergFormField top(1, 1);
    top.add(top_mono(1), CoefficientFn::step(1, 0, Q(0), Q(1)));
    top.threshold = {1.0};
    auto r2 = check_compatibility(top, 50);
    CHECK(!r2.ok);
    CHECK(r2.mono == top_mono(1));

    LagerbergFormField bumped(1, 1);
    bumped.add(top_mono(1), CoefficientFn::bump(1, 0, Q(0), Q(1)));
    bumped.threshold = {1.0};
    CHECK(check_compatibility(bumped, 50).ok);
}

TEST_CASE("positivity transport at sampled points") {
    Rng rng(71);
    for (int t = 0; t < 20; ++t) {
        int n = static_cast<int>(rng.uniform_int(1, 3));
        int p = static_cast<int>(rng.uniform_int(1, n));
        LagerbergFormField a(n);
        for (int k = 0; k < 2; ++k) {
            auto sq = LagerbergFormField::from_form(random_positive(rng, n, p, 1), random_bump_fn(rng, n, 1));
            for (auto& [m, f] : sq.coeffs) a.add(m, f);
        }
        auto s = trop_pullback_field(a);
        for (int k = 0; k < 5; ++k) {
            std::vector<double> u(static_cast<std::size_t>(n));
            for (auto& x : u) x = rng.uniform(-0.5, 0.5);
            LForm fib = a.fiber_at(u);
            CForm cf = s.fiber_at(u);
            if (fib.is_zero()) continue;
            CHECK(positivity_verdict(fib, Tier::Positive).answer == positivity_verdict(cf).answer);
        }
    }
}
