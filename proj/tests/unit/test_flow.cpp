#include <doctest.h>

#include <cmath>

#include "dld/errors.hpp"
#include "dld/flow.hpp"

using namespace dld;

namespace {

// Synthetic field filled from a function of the mapped node coordinates.
template <class Fn>
FlowField synthetic(const DldParams& p, int res, Fn fn) {
    std::vector<double> u(static_cast<std::size_t>(res) * res), v(u.size());
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            const Vec2 w = fn(i, j);
            u[static_cast<std::size_t>(j) * res + i] = w.x;
            v[static_cast<std::size_t>(j) * res + i] = w.y;
        }
    return FlowField(p, res, std::move(u), std::move(v), p.re);
}

const FlowField& reference_field() {
    static const FlowField f = [] {
        SolverConfig cfg;
        cfg.res = 64;
        return solve_flow(DldParams::make(0.5, 5, 1.0), cfg);
    }();
    return f;
}

}  // namespace

TEST_CASE("plane Poiseuille channel") {
    const int m = 40, lo = 4, hi = 36;
    const double nu = 1.0 / 6.0, force = 1e-6;
    LatticeSolver lat(m, 0, [&](int, int j) { return j < lo || j >= hi; }, nu);
    lat.set_force({force, 0.0});
    lat.run_to_steady(1e-10, 400000, 200);
    double worst = 0.0;
    for (int j = lo; j < hi; ++j) {
        const double y = j + 0.5;
        const double exact = force / (2.0 * nu) * (y - lo) * (hi - y);
        const Vec2 got = lat.velocity(7, j);
        worst = std::max(worst, std::abs(got.x - exact) / exact);
        CHECK(std::abs(got.y) < 1e-12);
    }
    CHECK(worst < 0.02);
}

TEST_CASE("interpolation degenerates at nodes and midpoints") {
    const DldParams p = DldParams::make(0.5, 5, 1.0);
    const int res = 32;
    const FlowField f = synthetic(p, res, [](int i, int j) {
        return Vec2{std::sin(0.3 * i) + j, std::cos(0.2 * j) - i};
    });
    const Vec2 node = interpolate_velocity(f, {5.0 / res, 9.0 / res});
    CHECK(node.x == f.u_at(5, 9));
    CHECK(node.y == f.v_at(5, 9));
    const Vec2 mid = interpolate_velocity(f, {5.5 / res, 9.5 / res});
    CHECK(mid.x == doctest::Approx(0.25 * (f.u_at(5, 9) + f.u_at(6, 9) + f.u_at(5, 10) + f.u_at(6, 10))));
    CHECK(mid.y == doctest::Approx(0.25 * (f.v_at(5, 9) + f.v_at(6, 9) + f.v_at(5, 10) + f.v_at(6, 10))));
}

TEST_CASE("interpolation is lattice periodic") {
    const DldParams p = DldParams::make(0.4, 4, 1.0);
    const int res = 32;
    const FlowField f = synthetic(p, res, [](int i, int j) {
        return Vec2{std::sin(0.7 * i + 0.1 * j * j), std::cos(1.3 * j) * i};
    });
    // Oracle: a 3x3 tiled copy of the grid, interpolated without any wrap.
    const int big = 3 * res;
    auto tiled = [&](int I, int J) { return Vec2{f.u_at(I % res, J % res), f.v_at(I % res, J % res)}; };
    auto oracle = [&](Vec2 q) {
        const double gx = (q.x + 1.0) * res, gy = (q.y + 1.0) * res;
        const int i = static_cast<int>(std::floor(gx)), j = static_cast<int>(std::floor(gy));
        const double tx = gx - i, ty = gy - j;
        REQUIRE(i >= 0);
        REQUIRE(j + 1 < big);
        return tiled(i, j) * ((1 - tx) * (1 - ty)) + tiled(i + 1, j) * (tx * (1 - ty)) +
               tiled(i, j + 1) * ((1 - tx) * ty) + tiled(i + 1, j + 1) * (tx * ty);
    };
    const CellGeometry g = unit_cell(p);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Vec2 q{0.013 + 0.0047 * k, 0.91 - 0.0039 * k};
        const Vec2 x = map_from_unit(q, p.n, 1.0);
        for (Vec2 shift : {g.a1, g.a2, g.a1 * -1.0, g.a1 + g.a2}) {
            const Vec2 a = f.velocity_at(x);
            const Vec2 b = f.velocity_at(x + shift);
            worst = std::max(worst, norm(a - b));
        }
        worst = std::max(worst, norm(interpolate_velocity(f, q) - oracle(q)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("Reynolds measurement arithmetic") {
    // nu = g / Re = 0.05 with g = 0.5.
    const DldParams p = DldParams::make(0.5, 5, 10.0);
    const FlowField uniform = synthetic(p, 32, [](int, int) { return Vec2{1.0, 0.0}; });
    CHECK(measure_reynolds(uniform, p) == doctest::Approx(10.0).epsilon(1e-12));
    const FlowField zero = synthetic(p, 32, [](int, int) { return Vec2{}; });
    CHECK(measure_reynolds(zero, p) == 0.0);
}

TEST_CASE("solver configuration checks") {
    SolverConfig cfg;
    cfg.res = 16;
    CHECK_THROWS_AS(cfg.validate(), RangeError);
    cfg.res = 64;
    cfg.residual_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), RangeError);
    cfg.residual_tol = 1e-7;
    cfg.drive_sign = 0.5;
    CHECK_THROWS_AS(cfg.validate(), RangeError);
}

TEST_CASE("converged pillar flow satisfies the field invariants") {
    const FlowField& f = reference_field();
    const DldParams& p = f.params();
    CHECK(std::abs(f.achieved_re() - p.re) / p.re < 0.01);
    CHECK(std::abs(measure_reynolds(f, p) - 1.0) < 0.01);
    const CellGeometry g = unit_cell(p);
    const int res = f.res();
    const double h = 1.0 / res;
    double vmax = f.max_speed(), ring = 0.0;
    bool finite = true, zero_inside = true;
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            const double s = std::hypot(f.u_at(i, j), f.v_at(i, j));
            finite = finite && std::isfinite(s);
            const double d = g.signed_distance(map_from_unit({i * h, j * h}, p.n, 1.0));
            if (d < 0.0) zero_inside = zero_inside && s == 0.0;
            else if (d < h) ring = std::max(ring, s);
        }
    CHECK(finite);
    CHECK(zero_inside);
    CHECK(ring < 0.2 * vmax);
    const DivergenceStats div = divergence(f);
    CHECK(div.nodes > 1000);
    CHECK(div.max_abs < 1e-3 * div.bound_scale);
}

TEST_CASE("Stokes reversibility") {
    SolverConfig cfg;
    cfg.res = 48;
    const DldParams p = DldParams::make(0.5, 4, 0.01);
    const FlowField fwd = solve_flow(p, cfg);
    cfg.drive_sign = -1.0;
    const FlowField rev = solve_flow(p, cfg);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < fwd.u().size(); ++k) {
        num = std::max(num, std::hypot(fwd.u()[k] + rev.u()[k], fwd.v()[k] + rev.v()[k]));
        den = std::max(den, std::hypot(fwd.u()[k], fwd.v()[k]));
    }
    CHECK(num / den < 1e-6);
    CHECK(std::abs(rev.achieved_re() - 0.01) < 1e-4);
}

TEST_CASE("Stokes linearity in the body force") {
    const int n = 4, m = 48;
    const CellGeometry g = unit_cell_unchecked(0.5, n);
    auto solid = [&](int i, int j) { return g.signed_distance({(i + 0.5) / m, (j + 0.5) / m}) < 0.0; };
    LatticeSolver a(m, m / n, solid, 0.5), b(m, m / n, solid, 0.5);
    a.set_force({1e-7, 0.0});
    b.set_force({3e-7, 0.0});
    a.run_to_steady(1e-11, 400000, 200);
    b.run_to_steady(1e-11, 400000, 200);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            num = std::max(num, norm(b.velocity(i, j) - a.velocity(i, j) * 3.0));
            den = std::max(den, norm(b.velocity(i, j)));
        }
    CHECK(num / den < 1e-4);
}

TEST_CASE("grid convergence of the gap flow") {
    SolverConfig cfg;
    cfg.res = 64;
    const DldParams p = DldParams::make(0.5, 5, 1.0);
    const FlowField& coarse = reference_field();
    cfg.res = 128;
    const FlowField fine = solve_flow(p, cfg);
    // Mean x velocity through the gap section, unnormalised by the drive loop.
    const CellGeometry g = unit_cell(p);
    const Vec2 c = g.center();
    auto gap_mean = [&](const FlowField& f) {
        double s = 0.0;
        const int k = 400;
        for (int q = 0; q < k; ++q) s += f.velocity_at({c.x, c.y - 1.0 + g.pillar_radius + (q + 0.5) * 0.5 / k}).x;
        return s / k;
    };
    CHECK(std::abs(gap_mean(fine) - gap_mean(coarse)) / gap_mean(fine) < 0.02);
    // The whole field, not only the controlled gap mean.
    const FlowField down = resample(fine, 64);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < down.u().size(); ++k) {
        num += std::pow(down.u()[k] - coarse.u()[k], 2) + std::pow(down.v()[k] - coarse.v()[k], 2);
        den += std::pow(down.u()[k], 2) + std::pow(down.v()[k], 2);
    }
    CHECK(std::sqrt(num / den) < 0.02);
}

TEST_CASE("resample keeps pillar nodes at zero") {
    const FlowField& f = reference_field();
    const FlowField r = resample(f, 32);
    const CellGeometry g = unit_cell(f.params());
    for (int j = 0; j < 32; ++j)
        for (int i = 0; i < 32; ++i)
            if (g.signed_distance(map_from_unit({i / 32.0, j / 32.0}, 5, 1.0)) < 0.0)
                CHECK(r.u_at(i, j) == 0.0);
    CHECK_THROWS_AS(FlowField(f.params(), 8, std::vector<double>(10), std::vector<double>(64), 1.0), ShapeError);
}
