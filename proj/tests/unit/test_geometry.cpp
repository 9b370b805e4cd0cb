#include <doctest.h>

#include <random>

#include "dld/errors.hpp"
#include "dld/geometry.hpp"

using namespace dld;

TEST_CASE("unit cell radius and lattice") {
    const CellGeometry a = unit_cell(DldParams::make(0.5, 5, 1.0));
    CHECK(a.pillar_radius == 0.25);
    const CellGeometry b = unit_cell(DldParams::make(0.25, 10, 1.0));
    CHECK(b.pillar_radius == 0.125);
    CHECK(b.a1.x == 1.0);
    CHECK(b.a1.y == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(b.a2 == Vec2{0.0, 1.0});
    const CellGeometry c = unit_cell(DldParams::make(0.75, 3, 1.0));
    CHECK(c.gap_fraction() == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("parameter hull is enforced") {
    CHECK_THROWS_AS(DldParams::make(0.2, 5, 1.0), RangeError);
    CHECK_THROWS_AS(DldParams::make(0.8, 5, 1.0), RangeError);
    CHECK_THROWS_AS(DldParams::make(0.5, 2, 1.0), RangeError);
    CHECK_THROWS_AS(DldParams::make(0.5, 11, 1.0), RangeError);
    CHECK_THROWS_AS(DldParams::make(0.5, 5, 0.001), RangeError);
    CHECK_THROWS_AS(DldParams::make(0.5, 5, 30.0), RangeError);
    CHECK_THROWS_AS(DldParams::make(0.5, 5, 1.0, -2.0), RangeError);
    CHECK_NOTHROW(DldParams::make(0.25, 3, 0.01, 10.0));
    CHECK_NOTHROW(DldParams::make(0.75, 10, 25.0));
}

TEST_CASE("pillar images tile the row-shifted array") {
    const CellGeometry g = unit_cell(DldParams::make(0.4, 4, 1.0));
    CHECK(g.pillar_radius > 0.0);
    CHECK(g.pillar_radius < 0.5);
    const Vec2 c = g.center();
    int found = 0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
            const Vec2 want = c + g.a1 * i + g.a2 * j;
            for (const Vec2& q : g.pillar_centers)
                if (norm(q - want) < 1e-14) ++found;
        }
    CHECK(found == 9);
    // One column over, the row has moved up by 1/N.
    CHECK(g.signed_distance(c + Vec2{1.0, 0.25}) == doctest::Approx(-g.pillar_radius));
}

TEST_CASE("shear map examples") {
    CHECK(map_to_unit({0, 0}, 7, 3.0) == Vec2{0, 0});
    const Vec2 a = map_to_unit({2.0, 0.0}, 5, 2.0);
    CHECK(a.x == 1.0);
    CHECK(a.y == doctest::Approx(-0.2).epsilon(1e-15));
    const Vec2 b = map_to_unit({2.0, 0.4}, 5, 2.0);
    CHECK(b.x == 1.0);
    CHECK(std::abs(b.y) < 1e-15);
    const Vec2 c = map_from_unit({1.0, -0.2}, 5, 1.0);
    CHECK(c.x == 1.0);
    CHECK(std::abs(c.y) < 1e-15);
    CHECK(map_from_unit({0, 0}, 5, 1.0) == Vec2{0, 0});
    CHECK_THROWS_AS(map_to_unit({1, 1}, 5, 0.0), DomainError);
    CHECK_THROWS_AS(map_from_unit({1, 1}, 5, -1.0), DomainError);
    CHECK_THROWS_AS(map_to_unit({1, 1}, 0, 1.0), DomainError);
}

TEST_CASE("shear map round trip, affinity and determinant") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0), w(-2.0, 3.0);
    std::uniform_int_distribution<int> nn(1, 10);
    double worst = 0.0, worst_affine = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const int n = nn(rng);
        const double L = 0.1 + std::abs(u(rng));
        const Vec2 p{u(rng) * L, u(rng) * L};
        const Vec2 q{u(rng) * L, u(rng) * L};
        const Vec2 back = map_from_unit(map_to_unit(p, n, L), n, L);
        worst = std::max(worst, norm(back - p) / L);
        const double al = w(rng), be = 1.0 - al;
        const Vec2 lhs = map_to_unit(p * al + q * be, n, L);
        const Vec2 rhs = map_to_unit(p, n, L) * al + map_to_unit(q, n, L) * be;
        worst_affine = std::max(worst_affine, norm(lhs - rhs));
    }
    CHECK(worst < 1e-12);
    CHECK(worst_affine < 1e-12);

    for (int n : {3, 5, 10}) {
        const double L = 2.5;
        const Vec2 ex = map_to_unit({1, 0}, n, L), ey = map_to_unit({0, 1}, n, L);
        CHECK(ex.x * ey.y - ex.y * ey.x == doctest::Approx(1.0 / (L * L)).epsilon(1e-14));
    }
}
