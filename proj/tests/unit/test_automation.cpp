#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dld/automation.hpp"
#include "dld/errors.hpp"
#include "dld/surrogate.hpp"

using namespace dld;
namespace fs = std::filesystem;

namespace {

/// Smooth synthetic d_c with the qualitative trends of the solver: falls with N,
/// physical size rises weakly with f, mild Re dependence that is steeper at high f.
double synthetic(const DldParams& p) {
    const double g = 1.0 - p.f;
    return g * (0.5 + 0.1 * p.f) * std::pow(5.0 / p.n, 0.48) * (1.0 + 0.004 * p.f * p.re);
}

DesignOptions quick() {
    DesignOptions o;
    o.pop_size = 40;
    o.generations = 30;
    return o;
}

}  // namespace

TEST_CASE("bandwidth of constant and linear surrogates") {
    const DcModel flat = pointwise_model([](const DldParams&) { return 0.2; });
    CHECK(bandwidth(flat, 0.5, 5, 10.0) == 0.0);
    const double a = 0.1, b = 0.004;
    const DcModel lin = pointwise_model([&](const DldParams& p) { return a + b * p.re; });
    const double f = 0.4, g = 12.0;
    CHECK(bandwidth(lin, f, 5, g) == doctest::Approx(b * (25.0 - 0.01) * g / (1.0 - f)).epsilon(1e-12));
    CHECK(bandwidth_re_grid().size() == 50);
    CHECK_THROWS_AS(bandwidth(lin, 0.9, 5, g), RangeError);
    CHECK_THROWS_AS(bandwidth(lin, 0.5, 5, 0.0), DomainError);
}

TEST_CASE("stability is a central difference with flagged boundaries") {
    const DcModel flat = pointwise_model([](const DldParams&) { return 0.2; });
    CHECK(stability(flat, 0.5, 5, 3.0, 10.0).value == 0.0);
    const DcModel lin = pointwise_model([](const DldParams& p) { return 0.1 + 0.003 * p.re; });
    const Stability mid = stability(lin, 0.5, 5, 3.0, 10.0);
    CHECK(mid.value == doctest::Approx(0.003 * 10.0 / 0.5).epsilon(1e-9));
    CHECK(!mid.one_sided);
    CHECK(stability(lin, 0.5, 5, 0.01, 10.0).one_sided);
    CHECK(stability(lin, 0.5, 5, 25.0, 10.0).one_sided);
    CHECK(stability(lin, 0.5, 5, 0.01, 10.0).value == doctest::Approx(0.06).epsilon(1e-9));
    // Quadratic response: the central difference is exact.
    const DcModel quad = pointwise_model([](const DldParams& p) { return 0.1 + 1e-4 * p.re * p.re; });
    CHECK(stability(quad, 0.5, 5, 10.0, 1.0).value == doctest::Approx(2e-4 * 10.0 * 2.0).epsilon(1e-9));
}

TEST_CASE("scale equivariance in G") {
    const DcModel m = pointwise_model(synthetic);
    for (double k : {2.0, 4.0}) {
        CHECK(bandwidth(m, 0.6, 4, 10.0 * k) == k * bandwidth(m, 0.6, 4, 10.0));
        CHECK(stability(m, 0.6, 4, 5.0, 10.0 * k).value == k * stability(m, 0.6, 4, 5.0, 10.0).value);
        DesignRequest r;
        const DesignCandidate a = evaluate_design(m, r, {0.6, 4, 5.0, 10.0});
        const DesignCandidate b = evaluate_design(m, r, {0.6, 4, 5.0, 10.0 * k});
        CHECK(b.dc_um == k * a.dc_um);
    }
}

TEST_CASE("candidates carry both metrics whatever phi is") {
    const DcModel m = pointwise_model(synthetic);
    const Vec genes{0.6, 4, 5.0, 10.0};
    const double bw = bandwidth(m, 0.6, 4, 10.0);
    const double st = stability(m, 0.6, 4, 5.0, 10.0).value;
    REQUIRE(bw > 0.0);
    for (double phi : {0.0, 0.3, 1.0}) {
        DesignRequest r;
        r.phi = phi;
        const DesignCandidate c = evaluate_design(m, r, genes);
        CHECK(c.bw_um == doctest::Approx(bw).epsilon(1e-12));
        CHECK(c.stab.value == doctest::Approx(st).epsilon(1e-12));
        CHECK(c.objectives[1] == doctest::Approx(-phi * bw + (1.0 - phi) * st).epsilon(1e-12));
    }
}

TEST_CASE("design requests are validated") {
    const DcModel m = pointwise_model(synthetic);
    DesignRequest r;
    r.d1_um = r.d2_um = 6.0;
    CHECK_THROWS_AS(design(r, m, quick()), ArgumentError);
    r.d1_um = 5.0;
    r.d2_um = 8.0;
    r.phi = 1.5;
    CHECK_THROWS_AS(design(r, m, quick()), ArgumentError);
    r.phi = 0.0;
    r.cn = {Directive::Fixed, 3.5};
    CHECK_THROWS_AS(design(r, m, quick()), ArgumentError);
    CHECK_THROWS_AS(directive_from_name("lowest"), ArgumentError);
}

TEST_CASE("design honours directives and the target") {
    const DcModel m = pointwise_model(synthetic);
    DesignRequest r;
    r.cf.kind = Directive::Min;
    const DesignResult a = design(r, m, quick());
    CHECK(a.best.f == 0.25);
    CHECK(a.best.dc_um > 5.0);
    CHECK(a.best.dc_um < 8.0);
    CHECK(a.best.dc_um == doctest::Approx(6.5).epsilon(1e-3));
    CHECK(!a.archive.empty());

    r.cf = {};
    r.cn = {Directive::Fixed, 7};
    r.cre.kind = Directive::Max;
    const DesignResult b = design(r, m, quick());
    CHECK(b.best.n == 7);
    CHECK(b.best.re == 25.0);
    CHECK(b.best.stab.one_sided);

    r.cn = {};
    r.cre = {};
    r.cf.kind = Directive::Max;
    r.phi = 1.0;
    const DesignResult c = design(r, m, quick());
    r.phi = 0.0;
    const DesignResult d = design(r, m, quick());
    CHECK(c.best.f == 0.75);
    CHECK(c.best.bw_um >= d.best.bw_um);

    const DesignResult again = design(r, m, quick());
    CHECK(result_to_json(again).dump() == result_to_json(d).dump());
}

TEST_CASE("unreachable targets are infeasible") {
    const DcModel tiny = pointwise_model([](const DldParams& p) { return 0.01 * (1.0 - p.f); });
    DesignRequest r;
    try {
        design(r, tiny, quick());
        FAIL("expected infeasibility");
    } catch (const InfeasibleError& e) {
        CHECK(e.best_dc_um() <= 0.41);
        CHECK(e.best_dc_um() > 0.0);
    }
}

TEST_CASE("design JSON round-trip") {
    DesignResult r;
    r.request.d1_um = 4.5;
    r.request.cn = {Directive::Fixed, 6};
    r.request.cre.kind = Directive::Min;
    r.best = {0.31, 6, 0.01, 12.25, 6.4999999999999991, 3.25, {0.125, true}, {1e-3, -3.25, 0.0}};
    r.e_pct = 2.5;
    const DesignResult back = result_from_json(result_to_json(r));
    CHECK(back.best.dc_um == r.best.dc_um);
    CHECK(back.best.n == 6);
    CHECK(back.best.stab.one_sided);
    CHECK(back.request.cn.kind == Directive::Fixed);
    CHECK(back.request.cn.value == 6.0);
    CHECK(back.request.cre.kind == Directive::Min);
    CHECK(back.e_pct == 2.5);
    CHECK(!back.dc_solver_um.has_value());
    CHECK(archive_csv({r.best}).rfind("f,N,Re,G_um", 0) == 0);
}

TEST_CASE("verification and device simulation against a solver field") {
    SolverConfig cfg;
    cfg.res = 64;
    const FlowField field = solve_flow(DldParams::make(0.5, 4, 1.0), cfg);
    const CriticalResult cr = critical_diameter_for(field);
    REQUIRE(cr.d_c.has_value());
    DesignCandidate c;
    c.f = 0.5;
    c.n = 4;
    c.re = 1.0;
    c.gap_um = 10.0;
    c.dc_um = physical_dc(*cr.d_c, c.f, c.gap_um);
    const Verification v = verify(c, field);
    CHECK(v.e_pct == 0.0);
    c.dc_um *= 1.03;
    CHECK(verify(c, field).e_pct == doctest::Approx(3.0).epsilon(1e-9));

    const std::vector<ParticleRun> runs = simulate_device(c, field, {8.0, 5.0}, 10);
    REQUIRE(runs.size() == 2);
    CHECK(runs[0].trajectory.mode == Mode::Bumped);
    CHECK(runs[1].trajectory.mode == Mode::Zigzag);
    REQUIRE(runs[0].recurrence.rows.size() >= 9);
    for (const RecurrenceRow& row : runs[0].recurrence.rows) CHECK(row.displacement > 0.5);
    double net = 0.0;
    for (const RecurrenceRow& row : runs[1].recurrence.rows) net += row.displacement;
    CHECK(std::abs(net) < 1.0);
    CHECK_THROWS_AS(simulate_device(c, field, {10.5}, 2), PlacementError);
    CHECK_THROWS_AS(simulate_device(c, field, {5.0}, 0), ArgumentError);

    const fs::path dir = fs::temp_directory_path() / "dld_report_test";
    fs::remove_all(dir);
    DesignResult res;
    res.best = c;
    res.archive = {c};
    write_report(dir, res, pointwise_model(synthetic), runs);
    for (const char* f : {"result.json", "pareto.csv", "dc_curve.csv", "dc_curve.svg", "trajectories.svg",
                          "particle_0_trajectory.csv", "particle_1_recurrence.csv"})
        CHECK(fs::exists(dir / f));
    const std::string svg = read_json(dir / "result.json").dump();
    CHECK(svg.find("Dc_um") != std::string::npos);
    fs::remove_all(dir);
}
