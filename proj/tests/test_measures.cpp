#include "doctest.h"

#include "trop/measures.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

using namespace trop;

namespace {

using Box = std::vector<std::pair<std::optional<Q>, std::optional<Q>>>;

Mat<Q> identity(int n) {
    Mat<Q> a = zero_mat<Q>(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < a.size(); ++i) a[i][i] = 1;
    return a;
}

// Density pol(t) exp(lin t + quad t^2) on an interval of R (n = 1, dense stratum).
Density line_density(std::optional<Q> lo, std::optional<Q> hi, Weight w, const Q& c = 1) {
    return make_density(1, 0, identity(1), QVec{Q(0)}, Polyhedron::box({{lo, hi}}), w, c);
}

Weight exp_weight(const QVec& lin, const Mat<Q>& quad = {}) {
    Weight w;
    w.lin = lin;
    w.quad = quad;
    return w;
}

PieceMeasure of(int n, std::vector<Atom> atoms, std::vector<Density> ds) {
    PieceMeasure m(n);
    m.atoms = std::move(atoms);
    m.densities = std::move(ds);
    return m;
}

// Exact polynomial in one variable from its roots and multiplicities.
std::vector<Q> from_roots(const Q& lead, const std::vector<std::pair<Q, int>>& roots) {
    std::vector<Q> p{lead};
    for (auto& [r, m] : roots)
        for (int k = 0; k < m; ++k) {
            std::vector<Q> q(p.size() + 1, Q(0));
            for (std::size_t i = 0; i < p.size(); ++i) {
                q[i + 1] += p[i];
                q[i] -= r * p[i];
            }
            p = q;
        }
    return p;
}

Q eval_poly(const std::vector<Q>& p, const Q& x) {
    Q s = 0;
    for (std::size_t i = p.size(); i-- > 0;) s = s * x + p[i];
    return s;
}

// Random measure on R_inf^2 with pieces on each stratum, rational data and decaying weights.
PieceMeasure random_measure(Rng& rng) {
    PieceMeasure m(2);
    for (Mask s = 0; s < 4; ++s) {
        QVec u{rng.small_rational(4, 3), rng.small_rational(4, 3)};
        for (int i : mask_elements(s)) u[static_cast<std::size_t>(i)] = 0;
        m.atoms.push_back(dirac(ChartPoint{s, u}, rng.small_rational(5, 2)));
    }
    Q a = rng.small_rational(2, 2);
    m.densities.push_back(make_density(2, 0, identity(2), QVec{Q(0), Q(0)},
                                       Polyhedron::box({{a, a + 1}, {Q(-1), Q(1)}}),
                                       exp_weight({rng.small_rational(1, 2), Q(0)}), rng.small_rational(3, 1) + Q(1, 7)));
    Mat<Q> A{{Q(0)}, {Q(1)}};
    m.densities.push_back(make_density(2, 1, A, QVec{Q(0), Q(0)}, Polyhedron::box({{Q(-2), Q(2)}}), Weight{}, Q(-2)));
    return m;
}

}  // namespace

TEST_CASE("integration against atoms and boxes") {
    PieceMeasure leb = of(1, {}, {lebesgue_box(1, {{Q(0), Q(1)}})});
    CHECK(integrate_against(CoefficientFn::constant(1, 1), leb, 1e-10).value == doctest::Approx(1.0).epsilon(1e-14));

    PieceMeasure d3 = of(1, {dirac(finite_point({Q(3)}), Q(1))}, {});
    CHECK(integrate_against(CoefficientFn::coordinate(1, 0), d3, 1e-10).value == doctest::Approx(3.0).epsilon(1e-15));

    // Triangle {t >= 0, t1 + t2 <= 1}: area 1/2, ∫ t1 = 1/6.
    Polyhedron tri = Polyhedron::box({{Q(0), std::nullopt}, {Q(0), std::nullopt}});
    tri.add({Q(1), Q(1)}, Q(1));
    PieceMeasure t = of(2, {}, {make_density(2, 0, identity(2), {Q(0), Q(0)}, tri, Weight{}, Q(1))});
    CHECK(integrate_against(CoefficientFn::constant(2, 1), t, 1e-10).value == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(integrate_against(CoefficientFn::coordinate(2, 0), t, 1e-10).value == doctest::Approx(1.0 / 6).epsilon(1e-10));
}

TEST_CASE("bump against a Gaussian-growth density") {
    Weight w = exp_weight({Q(0)}, {{Q(1)}});
    PieceMeasure mu = of(1, {}, {line_density(Q(0), std::nullopt, w)});
    for (int n = 1; n <= 5; ++n) {
        auto f = CoefficientFn::bump(1, 0, Q(n), Q(n + 2));
        double v = integrate_against(f, mu, 1e-8).value;
        // Direct quadrature of b(x - n - 1) e^{x^2}.
        auto g = [&](double x) { return bump_derivative(0, x - n - 1) * std::exp(x * x); };
        double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, n, n + 2, 15, 1e-13);
        CHECK(v == doctest::Approx(oracle).epsilon(1e-8));
        CHECK(v > std::exp(double(n) * n) * bump_mass());
    }
}

TEST_CASE("closed form and quadrature agree") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 1 + static_cast<int>(rng.uniform_int(0, 1));
        Box box;
        for (int i = 0; i < n; ++i) {
            Q lo = rng.small_rational(3, 2);
            box.push_back({lo, lo + Q(rng.uniform_int(1, 3), 2)});
        }
        QVec lin;
        for (int i = 0; i < n; ++i) lin.push_back(rng.small_rational(2, 3));
        Density d = make_density(n, 0, identity(n), QVec(static_cast<std::size_t>(n), Q(0)), Polyhedron::box(box),
                                 exp_weight(lin), rng.small_rational(3, 1) + Q(1, 3));
        PieceMeasure mu = of(n, {}, {d});
        std::vector<int> a(static_cast<std::size_t>(n));
        for (auto& e : a) e = static_cast<int>(rng.uniform_int(0, 3));
        QVec ell;
        for (int i = 0; i < n; ++i) ell.push_back(rng.small_rational(1, 2));
        CoefficientFn f = CoefficientFn::monomial(n, a, rng.small_rational(3, 1) + Q(1, 5)) * CoefficientFn::exp_linear(n, ell);
        // Multiplying by a plateau equal to one on the box forces the quadrature route.
        CoefficientFn g = f;
        for (int i = 0; i < n; ++i)
            g = g * CoefficientFn::plateau(n, i, *box[static_cast<std::size_t>(i)].first,
                                           *box[static_cast<std::size_t>(i)].second, Q(1, 2));
        double exact = integrate_against(f, mu, 1e-10).value;
        double quad = integrate_against(g, mu, 1e-10).value;
        CHECK(quad == doctest::Approx(exact).epsilon(1e-8));
    }
}

TEST_CASE("integration is linear in the function and the measure") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        PieceMeasure m1 = random_measure(rng), m2 = random_measure(rng);
        auto f = random_bump_fn(rng, 2, 2), g = random_bump_fn(rng, 2, 2);
        Q a = rng.small_rational(3, 2);
        double lhs = integrate_against(f + a * g, m1, 1e-10).value;
        double rhs = integrate_against(f, m1, 1e-10).value + a.get_d() * integrate_against(g, m1, 1e-10).value;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8).scale(1.0));
        double lm = integrate_against(f, m1 + scaled(m2, a), 1e-10).value;
        double rm = integrate_against(f, m1, 1e-10).value + a.get_d() * integrate_against(f, m2, 1e-10).value;
        CHECK(lm == doctest::Approx(rm).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("divergent integrals are reported") {
    PieceMeasure half_line = of(1, {}, {line_density(Q(0), std::nullopt, Weight{})});
    CHECK_THROWS_AS(integrate_against(CoefficientFn::constant(1, 1), half_line, 1e-8), MeasureError);
    try {
        integrate_against(CoefficientFn::constant(1, 1), half_line, 1e-8);
    } catch (const MeasureError& e) {
        CHECK(e.kind == "Divergent");
    }
    // A step that is one near infinity against e^{-u} converges: ∫_0^∞ S(u - 2) e^{-u} du.
    PieceMeasure decay = of(1, {}, {line_density(Q(0), std::nullopt, exp_weight({Q(-1)}))});
    auto s = CoefficientFn::step(1, 0, Q(1), Q(3));
    double v = integrate_against(s, decay, 1e-9).value;
    auto g = [](double x) { return step_derivative(0, x - 2) * std::exp(-x); };
    double oracle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 1, 3, 15, 1e-13) + std::exp(-3.0);
    CHECK(v == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("weight sign certificates") {
    Weight lin;
    lin.pol = Poly::var(0);
    CHECK_THROWS_AS(line_density(Q(-1), Q(1), lin), MeasureError);
    CHECK_NOTHROW(line_density(Q(0), Q(1), lin));
    Weight sq;
    sq.pol = Poly::var(0) * Poly::var(0);
    CHECK_NOTHROW(line_density(Q(-1), Q(1), sq));
    Weight cube;
    cube.pol = -(Poly::var(0) - 1) * (Poly::var(0) - 1) * (Poly::var(0) - 1);
    CHECK_NOTHROW(line_density(Q(-1), Q(1), cube));
    CHECK_THROWS_AS(line_density(Q(-1), Q(2), cube), MeasureError);

    // Random polynomials with rational roots: exact sign at points between the roots is the oracle.
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::pair<Q, int>> roots;
        int nr = static_cast<int>(rng.uniform_int(0, 4));
        for (int i = 0; i < nr; ++i) roots.push_back({rng.small_rational(6, 3), static_cast<int>(rng.uniform_int(1, 3))});
        Q lead = rng.uniform_int(0, 1) ? Q(1) : Q(-2);
        auto p = from_roots(lead, roots);
        std::optional<Q> lo, hi;
        if (rng.uniform_int(0, 3)) lo = rng.small_rational(6, 2);
        if (rng.uniform_int(0, 3)) hi = (lo ? *lo : Q(-6)) + Q(rng.uniform_int(1, 12), 2);
        std::vector<Q> pts;
        for (auto& [r, m] : roots) pts.push_back(r);
        if (lo) pts.push_back(*lo);
        if (hi) pts.push_back(*hi);
        std::sort(pts.begin(), pts.end());
        std::vector<Q> probes;
        probes.push_back(pts.empty() ? Q(0) : pts.front() - 1);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) probes.push_back((pts[i] + pts[i + 1]) / 2);
        if (!pts.empty()) probes.push_back(pts.back() + 1);
        bool truth = true;
        for (auto& x : probes) {
            if (lo && x <= *lo) continue;
            if (hi && x >= *hi) continue;
            if (eval_poly(p, x) < 0) truth = false;
        }
        CHECK(univariate_nonnegative(p, lo, hi) == truth);
    }
}

TEST_CASE("total variation") {
    PieceMeasure mu = of(1, {dirac(finite_point({Q(0)}), Q(2)), dirac(finite_point({Q(1)}), Q(-1))}, {});
    auto [pos, neg] = total_variation_decompose(mu);
    REQUIRE(pos.atoms.size() == 1);
    REQUIRE(neg.atoms.size() == 1);
    CHECK(pos.atoms[0].w == 2);
    CHECK(neg.atoms[0].w == 1);
    CHECK(total_mass(total_variation(mu), 1e-10) == doctest::Approx(3.0));

    PieceMeasure neg3 = of(1, {}, {lebesgue_box(1, {{Q(0), Q(1)}}, Q(-3))});
    CHECK(total_mass(neg3, 1e-10) == doctest::Approx(-3.0));
    CHECK(total_mass(total_variation(neg3), 1e-10) == doctest::Approx(3.0));

    // |μ| integrates nonnegative functions to at least |∫ f dμ|, with equality for sign-pure μ.
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        PieceMeasure m = random_measure(rng);
        auto f = CoefficientFn::bump(2, 0, Q(-3), Q(3)) * CoefficientFn::bump(2, 1, Q(-3), Q(3));
        auto [p, q] = total_variation_decompose(m);
        double a = integrate_against(f, p, 1e-10).value, b = integrate_against(f, q, 1e-10).value;
        CHECK(a >= 0);
        CHECK(b >= 0);
        CHECK(integrate_against(f, m, 1e-10).value == doctest::Approx(a - b).scale(1.0));
        CHECK(integrate_against(f, total_variation(m), 1e-10).value == doctest::Approx(a + b).scale(1.0));
    }
}

TEST_CASE("image measures and local finiteness") {
    ImageMap incl{ImageKind::OpenInclusion, 1, 0, {}};
    PieceMeasure flat = of(1, {}, {line_density(Q(1), std::nullopt, Weight{})});
    try {
        image_measure(flat, incl);
        FAIL("expected NotLocallyFinite");
    } catch (const MeasureError& e) {
        CHECK(e.kind == "NotLocallyFinite");
    }
    auto r = local_finiteness(flat, 1, 0);
    CHECK_FALSE(r.ok);
    REQUIRE(r.ray);
    CHECK(*r.ray == QVec{Q(1)});

    PieceMeasure decay = of(1, {}, {line_density(Q(0), std::nullopt, exp_weight({Q(-1)}))});
    CHECK(same_pieces(image_measure(decay, incl), decay));

    PieceMeasure gauss_up = of(1, {}, {line_density(Q(0), std::nullopt, exp_weight({Q(0)}, {{Q(1)}}))});
    PieceMeasure gauss_down = of(1, {}, {line_density(Q(0), std::nullopt, exp_weight({Q(5)}, {{Q(-1)}}))});
    CHECK_FALSE(local_finiteness(gauss_up, 1, 0).ok);
    CHECK(local_finiteness(gauss_down, 1, 0).ok);
    // The forbidden boundary is never approached.
    CHECK(local_finiteness(flat, 1, 1).ok);
    // A weight e^{u} is compensated by an extra factor e^{-2u} but not by e^{-u}.
    PieceMeasure grow = of(1, {}, {line_density(Q(0), std::nullopt, exp_weight({Q(1)}))});
    CHECK(local_finiteness(grow, 1, 0, QVec{Q(-2)}).ok);
    CHECK_FALSE(local_finiteness(grow, 1, 0, QVec{Q(-1)}).ok);

    PieceMeasure atoms = of(1, {dirac(finite_point({Q(7)}), Q(3))}, {});
    CHECK(same_pieces(image_measure(atoms, incl), atoms));

    // Two-dimensional quadrant: e^{-u1} on [0,∞) x [0,1] is finite near u1 = ∞ but not along u2 if unbounded.
    Density strip = make_density(2, 0, identity(2), {Q(0), Q(0)}, Polyhedron::box({{Q(0), std::nullopt}, {Q(0), Q(1)}}),
                                 exp_weight({Q(-1), Q(0)}), Q(1));
    CHECK(local_finiteness(of(2, {}, {strip}), 3, 0).ok);
    Density quad = make_density(2, 0, identity(2), {Q(0), Q(0)},
                                Polyhedron::box({{Q(0), std::nullopt}, {Q(0), std::nullopt}}), exp_weight({Q(-1), Q(0)}), Q(1));
    auto rq = local_finiteness(of(2, {}, {quad}), 3, 0);
    CHECK_FALSE(rq.ok);
    CHECK(rq.toward == 2);
    CHECK(local_finiteness(of(2, {}, {quad}), 3, 2).ok);
}

TEST_CASE("recession rays") {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        Polyhedron p = Polyhedron::whole(2);
        int m = static_cast<int>(rng.uniform_int(0, 4));
        for (int r = 0; r < m; ++r) p.add({rng.small_rational(3, 1), rng.small_rational(3, 1)}, rng.small_rational(3, 1));
        if (p.is_empty()) continue;
        auto rays = p.recession_rays();
        // Every ray is a recession direction.
        for (auto& v : rays)
            for (std::size_t r = 0; r < p.G.size(); ++r) CHECK(p.G[r][0] * v[0] + p.G[r][1] * v[1] <= 0);
        // Every sampled recession direction is a nonnegative combination of the rays.
        for (int s = 0; s < 20; ++s) {
            QVec d{rng.small_rational(5, 2), rng.small_rational(5, 2)};
            bool rec = true;
            for (std::size_t r = 0; r < p.G.size(); ++r)
                if (p.G[r][0] * d[0] + p.G[r][1] * d[1] > 0) rec = false;
            if (!rec || (d[0] == 0 && d[1] == 0)) continue;
            // Solve d = a v + b w over ray pairs with a, b >= 0.
            bool found = false;
            for (std::size_t i = 0; i < rays.size() && !found; ++i)
                for (std::size_t j = 0; j < rays.size() && !found; ++j) {
                    auto& v = rays[i];
                    auto& w = rays[j];
                    Q det = v[0] * w[1] - v[1] * w[0];
                    if (det == 0) {
                        if (v[0] * d[1] - v[1] * d[0] == 0 && v[0] * d[0] + v[1] * d[1] > 0) found = true;
                        continue;
                    }
                    Q a = (d[0] * w[1] - d[1] * w[0]) / det, b = (v[0] * d[1] - v[1] * d[0]) / det;
                    if (a >= 0 && b >= 0) found = true;
                }
            CHECK(found);
        }
    }
}

TEST_CASE("restriction") {
    PieceMeasure leb2 = of(1, {}, {lebesgue_box(1, {{Q(0), Q(2)}})});
    Polyhedron half = Polyhedron::whole(1);
    half.add({Q(1)}, Q(1));
    CHECK(same_pieces(restrict_to_polyhedron(leb2, half), of(1, {}, {lebesgue_box(1, {{Q(0), Q(1)}})})));

    PieceMeasure boundary = of(1, {dirac(ChartPoint{1, {Q(0)}}, Q(1))}, {});
    CHECK(restrict_to_stratum(boundary, 0).is_zero());
    CHECK(same_pieces(restrict_to_stratum(boundary, 1), boundary));

    // Summing the restrictions over all strata reproduces the measure.
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        PieceMeasure m = random_measure(rng);
        PieceMeasure sum(2);
        for (Mask s = 0; s < 4; ++s) sum += restrict_to_stratum(m, s);
        CHECK(same_pieces(sum, m));
        // Halfplane split of the dense stratum: densities recombine up to a null set.
        Q c = rng.small_rational(2, 3);
        Polyhedron left = Polyhedron::whole(2), right = Polyhedron::whole(2);
        left.add({Q(0), Q(1)}, c);
        right.add({Q(0), Q(-1)}, -c);
        PieceMeasure dense = restrict_to_stratum(m, 0);
        dense.atoms.clear();
        auto f = random_bump_fn(rng, 2, 2);
        double whole = integrate_against(f, dense, 1e-10).value;
        double split = integrate_against(f, restrict_to_polyhedron(dense, left), 1e-10).value +
                       integrate_against(f, restrict_to_polyhedron(dense, right), 1e-10).value;
        CHECK(split == doctest::Approx(whole).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("normal form merges identical pieces") {
    Density a = lebesgue_box(1, {{Q(0), Q(1)}}, Q(2));
    Density b = lebesgue_box(1, {{Q(0), Q(1)}}, Q(-2));
    CHECK(same_pieces(of(1, {}, {a, b}), PieceMeasure(1)));
    // Redundant constraints are removed.
    Polyhedron p = Polyhedron::box({{Q(0), Q(1)}});
    p.add({Q(2)}, Q(4));
    Density c = make_density(1, 0, identity(1), {Q(0)}, p, Weight{}, Q(2));
    CHECK(same_pieces(of(1, {}, {c}), of(1, {}, {lebesgue_box(1, {{Q(0), Q(1)}}, Q(2))})));
    CHECK_FALSE(same_pieces(of(1, {}, {c}), of(1, {}, {lebesgue_box(1, {{Q(0), Q(1)}}, Q(3))})));
}

TEST_CASE("derivative atoms are not measures") {
    PieceMeasure mu(2);
    mu.derivative_atoms.push_back({finite_point({Q(0), Q(0)}), {Q(1), Q(0)}, Q(1)});
    auto f = CoefficientFn::exp_linear(2, {Q(3), Q(0)}) * CoefficientFn::bump(2, 1, Q(-1), Q(1));
    CHECK_THROWS_AS(integrate_against(f, mu, 1e-8), MeasureError);
    auto r = integrate_against(f, mu, 1e-8, true);
    CHECK(r.non_measure);
    CHECK(r.value == doctest::Approx(-3.0 * std::exp(-1.0)));
    CHECK_THROWS_AS(total_variation_decompose(mu), MeasureError);
    CHECK_THROWS_AS(image_measure(mu, ImageMap{}), MeasureError);
    CHECK_THROWS_AS(restrict_to_stratum(mu, 0), MeasureError);
}

TEST_CASE("invalid densities") {
    CHECK_THROWS_AS(make_density(1, 0, {{Q(0)}}, {Q(0)}, Polyhedron::box({{Q(0), Q(1)}}), Weight{}, Q(1)), MeasureError);
    Polyhedron empty = Polyhedron::box({{Q(1), Q(0)}});
    CHECK_THROWS_AS(make_density(1, 0, identity(1), {Q(0)}, empty, Weight{}, Q(1)), MeasureError);
    CHECK_THROWS_AS(make_density(2, 1, identity(2), {Q(0), Q(0)}, Polyhedron::whole(2), Weight{}, Q(1)), MeasureError);
}
