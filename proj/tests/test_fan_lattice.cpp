#include "doctest.h"

#include "trop/fan_lattice.hpp"
#include "trop/linalg.hpp"

using namespace trop;

namespace {

QVec qv(std::initializer_list<long> xs) {
    QVec v;
    for (long x : xs) v.emplace_back(x);
    return v;
}

FanErrorKind error_of(const std::vector<std::vector<IVec>>& cones, int n) {
    try {
        validate_fan(n, cones);
    } catch (const FanError& e) {
        return e.kind;
    }
    return FanErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("projective plane fan has seven cones") {
    Fan f = projective_plane_fan();
    CHECK(f.cones.size() == 7);
    CHECK(f.cones[0].dim == 0);
    int rays = 0, twos = 0;
    for (auto& c : f.cones) {
        rays += c.dim == 1;
        twos += c.dim == 2;
    }
    CHECK(rays == 3);
    CHECK(twos == 3);
}

TEST_CASE("empty cone list gives the zero fan") {
    Fan f = validate_fan(3, {});
    REQUIRE(f.cones.size() == 1);
    CHECK(f.cones[0].dim == 0);
}

TEST_CASE("validation errors") {
    CHECK(error_of({{{1, 0}, {1, 2}}}, 2) == FanErrorKind::NotSmooth);
    CHECK(error_of({{{1, 0}, {-1, 0}}}, 2) == FanErrorKind::NotStrictlyConvex);
    CHECK(error_of({{{1, 0}, {0, 1}, {1, 1}}}, 2) == FanErrorKind::NotSmooth);
    // Two overlapping smooth cones.
    CHECK(error_of({{{1, 0}, {0, 1}}, {{1, 1}, {0, 1}}}, 2) == FanErrorKind::BadIntersection);
    CHECK_NOTHROW(validate_fan(2, {{{1, 0}, {1, 1}}, {{1, 1}, {0, 1}}}));
}

TEST_CASE("locate_relint") {
    Fan f = projective_plane_fan();
    int s = locate_relint(qv({0, 1}), f);
    CHECK(f.cones[static_cast<std::size_t>(s)].generators == std::vector<IVec>{{0, 1}});
    CHECK(locate_relint(qv({0, 0}), f) == 0);
    int t = locate_relint(qv({2, 3}), f);
    CHECK(f.cones[static_cast<std::size_t>(t)].dim == 2);
    CHECK(f.cones[static_cast<std::size_t>(t)].generators == std::vector<IVec>{{0, 1}, {1, 0}});
    Fan half = validate_fan(2, {{{1, 0}, {0, 1}}});
    CHECK_THROWS_AS(locate_relint(qv({-1, 0}), half), FanError);
}

TEST_CASE("stratum projections") {
    Fan f = orthant_fan(2);
    int s1 = f.id_of({{1, 0}});
    auto x = project_to_stratum(f, s1, qv({3, 5}));
    CHECK(x.coords == qv({5}));
    CHECK(stratum_projection(f, s1, s1, x) == x);
    int s12 = f.id_of({{1, 0}, {0, 1}});
    auto y = stratum_projection(f, s12, s1, x);
    CHECK(y.coords.empty());
    CHECK(y.stratum == s12);
    int s2 = f.id_of({{0, 1}});
    CHECK_THROWS_AS(stratum_projection(f, s2, s1, x), FanError);
}

TEST_CASE("limit points") {
    Fan f = projective_plane_fan();
    auto pt = limit_point(f, qv({7, -2}), qv({0, 1}));
    CHECK(f.cones[static_cast<std::size_t>(pt.stratum)].generators == std::vector<IVec>{{0, 1}});
    // Quotient by span((0,1)) keeps the first coordinate: vertically above p.
    CHECK(pt.coords == qv({7}));
    auto p0 = limit_point(f, qv({7, -2}), qv({0, 0}));
    CHECK(p0.stratum == 0);
    CHECK(p0.coords == qv({7, -2}));
    Fan o = orthant_fan(2);
    auto corner = limit_point(o, qv({1, 2}), qv({1, 1}));
    CHECK(o.cones[static_cast<std::size_t>(corner.stratum)].dim == 2);
    CHECK(corner.coords.empty());
}

TEST_CASE("limit point is invariant under translation along the cone") {
    Fan f = projective_plane_fan();
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        QVec p = {rng.small_rational(9, 4), rng.small_rational(9, 4)};
        QVec v = {Q(rng.uniform_int(-3, 3)), Q(rng.uniform_int(-3, 3))};
        auto base = limit_point(f, p, v);
        int s = locate_relint(v, f);
        QVec w(2, Q(0));
        for (auto& g : f.cones[static_cast<std::size_t>(s)].generators) {
            Q c = rng.small_rational(5, 3);
            w[0] += c * g[0];
            w[1] += c * g[1];
        }
        QVec p2 = {p[0] + w[0], p[1] + w[1]};
        CHECK(limit_point(f, p2, v) == base);
    }
}

TEST_CASE("projections compose") {
    Fan f = orthant_fan(3);
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        QVec p = {rng.small_rational(9, 4), rng.small_rational(9, 4), rng.small_rational(9, 4)};
        for (int s = 0; s < static_cast<int>(f.cones.size()); ++s)
            for (int tau : f.faces[static_cast<std::size_t>(s)])
                for (int ups : f.faces[static_cast<std::size_t>(tau)]) {
                    auto x = project_to_stratum(f, ups, p);
                    auto direct = stratum_projection(f, s, ups, x);
                    auto two = stratum_projection(f, s, tau, stratum_projection(f, tau, ups, x));
                    CHECK(direct == two);
                }
    }
}

TEST_CASE("toric charts") {
    Fan f = validate_fan(2, {{{0, 1}}});
    int rho = f.id_of({{0, 1}});
    auto ch = toric_chart(f, rho);
    CHECK(ch.basis == IMat{{0, 1}, {1, 0}});
    CHECK(ch.infinite_axes == std::vector<int>{1});
    auto z = toric_chart(f, 0);
    CHECK(z.infinite_axes.empty());
    CHECK(z.basis == IMat{{1, 0}, {0, 1}});
    Fan p2 = projective_plane_fan();
    for (int s = 0; s < static_cast<int>(p2.cones.size()); ++s) {
        auto c = toric_chart(p2, s);
        CHECK(static_cast<int>(c.infinite_axes.size()) == p2.dim(s));
        Mat<Q> b = zero_mat<Q>(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c.basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        Q d = exact_det(b);
        CHECK((d == 1 || d == -1));
    }
}

TEST_CASE("chart coordinates agree across overlapping charts up to a unimodular change") {
    Fan f = projective_plane_fan();
    int ray = f.id_of({{0, 1}});
    int m1 = f.id_of({{0, 1}, {1, 0}});
    int m2 = f.id_of({{0, 1}, {-1, -1}});
    auto c1 = toric_chart(f, m1), c2 = toric_chart(f, m2);
    Mat<Q> b1 = zero_mat<Q>(2, 2), b2 = zero_mat<Q>(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            b1[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c1.basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            b2[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c2.basis[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        }
    CHECK(qabs(exact_det(b1)) == 1);
    CHECK(qabs(exact_det(b2)) == 1);
    auto pt = limit_point(f, qv({4, 1}), qv({0, 1}));
    auto u1 = chart_coordinates(f, c1, pt), u2 = chart_coordinates(f, c2, pt);
    CHECK(popcount(u1.infinite) == 1);
    CHECK(popcount(u2.infinite) == 1);
}
