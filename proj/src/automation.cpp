#include "dld/automation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dld/dataset.hpp"
#include "dld/errors.hpp"
#include "dld/surrogate.hpp"
#include "dld/svg.hpp"

namespace dld {

namespace fs = std::filesystem;

DcModel fcnn_model(std::shared_ptr<const nn::NetParams> net) {
    return [net](const std::vector<DldParams>& ps) { return fcnn_predict_batch(*net, ps); };
}

DcModel pointwise_model(std::function<double(const DldParams&)> fn) {
    return [fn = std::move(fn)](const std::vector<DldParams>& ps) {
        std::vector<double> out;
        out.reserve(ps.size());
        for (const DldParams& p : ps) out.push_back(fn(p));
        return out;
    };
}

double physical_dc(double d_c, double f, double gap_um) { return d_c * gap_um / (1.0 - f); }

const std::vector<double>& bandwidth_re_grid() {
    static const std::vector<double> grid = fine_re_grid(0.499);
    return grid;
}

namespace {

DldParams point(double f, int n, double re) {
    DldParams p;
    p.f = f;
    p.n = n;
    p.re = re;
    return p;
}

void append_bandwidth_points(std::vector<DldParams>& ps, double f, int n) {
    for (double re : bandwidth_re_grid()) ps.push_back(point(f, n, re));
}

double bandwidth_from(const double* d, double f, double gap_um) {
    const std::size_t n = bandwidth_re_grid().size();
    const auto [lo, hi] = std::minmax_element(d, d + n);
    return physical_dc(*hi, f, gap_um) - physical_dc(*lo, f, gap_um);
}

struct Stencil {
    double re_lo, re_hi;
    bool one_sided;
};

Stencil stability_stencil(double re) {
    const double h = kStabilityStep;
    if (re - h < hull::re_min) return {re, re + h, true};
    if (re + h > hull::re_max) return {re - h, re, true};
    return {re - h, re + h, false};
}

Stability stability_from(double d_lo, double d_hi, const Stencil& s, double f, double gap_um) {
    const double slope = (physical_dc(d_hi, f, gap_um) - physical_dc(d_lo, f, gap_um)) / (s.re_hi - s.re_lo);
    return {std::abs(slope), s.one_sided};
}

void check_point(double f, int n, double re, double gap_um) {
    DldParams::make(f, n, re);
    if (!(gap_um > 0.0)) throw DomainError("gap G must be positive");
}

}  // namespace

double bandwidth(const DcModel& model, double f, int n, double gap_um) {
    check_point(f, n, hull::re_min, gap_um);
    std::vector<DldParams> ps;
    append_bandwidth_points(ps, f, n);
    const std::vector<double> d = model(ps);
    return bandwidth_from(d.data(), f, gap_um);
}

double bandwidth(const nn::NetParams& net, double f, int n, double gap_um) {
    return bandwidth(fcnn_model(std::make_shared<const nn::NetParams>(net)), f, n, gap_um);
}

Stability stability(const DcModel& model, double f, int n, double re, double gap_um) {
    check_point(f, n, re, gap_um);
    const Stencil s = stability_stencil(re);
    const std::vector<double> d = model({point(f, n, s.re_lo), point(f, n, s.re_hi)});
    return stability_from(d[0], d[1], s, f, gap_um);
}

Stability stability(const nn::NetParams& net, double f, int n, double re, double gap_um) {
    return stability(fcnn_model(std::make_shared<const nn::NetParams>(net)), f, n, re, gap_um);
}

const char* directive_name(Directive d) {
    switch (d) {
        case Directive::Free: return "free";
        case Directive::Min: return "min";
        case Directive::Max: return "max";
        case Directive::Fixed: return "fixed";
    }
    return "free";
}

Directive directive_from_name(const std::string& s) {
    if (s == "free" || s.empty()) return Directive::Free;
    if (s == "min") return Directive::Min;
    if (s == "max") return Directive::Max;
    if (s == "fixed") return Directive::Fixed;
    throw ArgumentError("unknown directive '" + s + "' (expected free, min, max or fixed)");
}

void DesignRequest::validate() const {
    if (!(d1_um > 0.0)) throw ArgumentError("D1 must be positive");
    if (!(d1_um < d2_um)) throw ArgumentError("D1 must be smaller than D2");
    if (!(phi >= 0.0 && phi <= 1.0)) throw ArgumentError("phi must lie in [0, 1]");
    if (periods < 1) throw ArgumentError("periods must be at least 1");
    if (cf.kind == Directive::Fixed && !(cf.value >= hull::f_min && cf.value <= hull::f_max)) {
        throw ArgumentError("fixed f lies outside [0.25, 0.75]");
    }
    if (cn.kind == Directive::Fixed &&
        !(cn.value >= hull::n_min && cn.value <= hull::n_max && cn.value == std::round(cn.value))) {
        throw ArgumentError("fixed N must be an integer in [3, 10]");
    }
    if (cre.kind == Directive::Fixed && !(cre.value >= hull::re_min && cre.value <= hull::re_max)) {
        throw ArgumentError("fixed Re lies outside [0.01, 25]");
    }
}

namespace {

struct Bounds {
    Vec lo{hull::f_min, static_cast<double>(hull::n_min), hull::re_min, 5.0};
    Vec hi{hull::f_max, static_cast<double>(hull::n_max), hull::re_max, 40.0};
};

const Bounds kHull{};

double directive_term(const Constraint& c, double x, int k) {
    const double lo = kHull.lo[k], hi = kHull.hi[k];
    if (c.kind == Directive::Min) return (x - lo) / (hi - lo);
    if (c.kind == Directive::Max) return (hi - x) / (hi - lo);
    return 0.0;
}

int decode_n(double x) { return static_cast<int>(std::clamp(std::lround(x), long{hull::n_min}, long{hull::n_max})); }

}  // namespace

DesignCandidate evaluate_design(const DcModel& model, const DesignRequest& req, const Vec& genes) {
    DesignCandidate c;
    c.f = genes.at(0);
    c.n = decode_n(genes.at(1));
    c.re = genes.at(2);
    c.gap_um = genes.at(3);
    const Stencil st = stability_stencil(c.re);
    std::vector<DldParams> ps{point(c.f, c.n, c.re)};
    append_bandwidth_points(ps, c.f, c.n);
    ps.push_back(point(c.f, c.n, st.re_lo));
    ps.push_back(point(c.f, c.n, st.re_hi));
    const std::vector<double> d = model(ps);
    c.dc_um = physical_dc(d[0], c.f, c.gap_um);
    c.bw_um = bandwidth_from(d.data() + 1, c.f, c.gap_um);
    c.stab = stability_from(d[d.size() - 2], d[d.size() - 1], st, c.f, c.gap_um);
    const double target = 0.5 * (req.d1_um + req.d2_um);
    c.objectives = {std::abs(c.dc_um - target), req.phi * -c.bw_um + (1.0 - req.phi) * c.stab.value,
                    directive_term(req.cf, c.f, 0) + directive_term(req.cn, c.n, 1) + directive_term(req.cre, c.re, 2)};
    return c;
}

namespace {

/// Moves Min/Max genes onto their hull bound and rescales G to hit the target exactly.
Vec polish(const DcModel& model, const DesignRequest& req, Vec genes, double g_lo, double g_hi) {
    const Constraint* cs[3] = {&req.cf, &req.cn, &req.cre};
    for (int k = 0; k < 3; ++k) {
        if (cs[k]->kind == Directive::Min) genes[k] = kHull.lo[k];
        if (cs[k]->kind == Directive::Max) genes[k] = kHull.hi[k];
    }
    genes[1] = decode_n(genes[1]);
    const double d = model({point(genes[0], static_cast<int>(genes[1]), genes[2])})[0];
    const double target = 0.5 * (req.d1_um + req.d2_um);
    if (d > 0.0) genes[3] = std::clamp(target * (1.0 - genes[0]) / d, g_lo, g_hi);
    return genes;
}

Vec genes_of(const DesignCandidate& c) { return {c.f, static_cast<double>(c.n), c.re, c.gap_um}; }

}  // namespace

DesignResult design(const DesignRequest& req, const DcModel& model, const DesignOptions& opts) {
    req.validate();
    if (!(opts.gap_lo_um > 0.0 && opts.gap_lo_um <= opts.gap_hi_um)) throw ArgumentError("invalid G bounds");

    MooProblem pb;
    pb.n_vars = 4;
    pb.n_objectives = 3;
    pb.lower = kHull.lo;
    pb.upper = kHull.hi;
    pb.lower[3] = opts.gap_lo_um;
    pb.upper[3] = opts.gap_hi_um;
    const Constraint* cs[3] = {&req.cf, &req.cn, &req.cre};
    for (int k = 0; k < 3; ++k)
        if (cs[k]->kind == Directive::Fixed) pb.lower[k] = pb.upper[k] = cs[k]->value;
    pb.evaluate = [&](const Vec& g) { return evaluate_design(model, req, g).objectives; };

    Nsga3Options no;
    no.pop_size = opts.pop_size;
    no.generations = opts.generations;
    no.directions = reference_directions(3, opts.directions);
    no.seed = opts.seed;
    no.jobs = opts.jobs;
    no.archive_csv = opts.archive_csv;
    const Nsga3Result run = nsga3_run(pb, no);

    DesignResult res;
    res.request = req;
    std::vector<DesignCandidate> pool;
    for (const Individual& ind : run.archive) {
        res.archive.push_back(evaluate_design(model, req, ind.genes));
        pool.push_back(res.archive.back());
    }
    for (const Individual& ind : run.population) pool.push_back(evaluate_design(model, req, ind.genes));
    const std::size_t raw = pool.size();
    for (std::size_t k = 0; k < raw; ++k)
        pool.push_back(evaluate_design(model, req, polish(model, req, genes_of(pool[k]), pb.lower[3], pb.upper[3])));

    std::vector<const DesignCandidate*> feasible;
    for (const DesignCandidate& c : pool)
        if (c.dc_um > req.d1_um && c.dc_um < req.d2_um) feasible.push_back(&c);
    if (feasible.empty()) {
        const DesignCandidate* best = &pool.front();
        for (const DesignCandidate& c : pool)
            if (c.objectives[0] < best->objectives[0]) best = &c;
        throw InfeasibleError("no design separates " + fmt4(req.d1_um) + " um from " + fmt4(req.d2_um) +
                                  " um; closest critical diameter " + fmt4(best->dc_um) + " um",
                              best->dc_um);
    }
    // Directives first, then the target match (with a tolerance band), then the phi objective.
    double best3 = std::numeric_limits<double>::infinity();
    for (const DesignCandidate* c : feasible) best3 = std::min(best3, c->objectives[2]);
    std::erase_if(feasible, [&](const DesignCandidate* c) { return c->objectives[2] > best3 + 1e-12; });
    double best1 = std::numeric_limits<double>::infinity();
    for (const DesignCandidate* c : feasible) best1 = std::min(best1, c->objectives[0]);
    const DesignCandidate* pick = nullptr;
    for (const DesignCandidate* c : feasible) {
        if (c->objectives[0] > best1 + opts.target_tolerance_um) continue;
        if (!pick || c->objectives[1] < pick->objectives[1]) pick = c;
    }
    res.best = *pick;
    return res;
}

DesignResult design(const DesignRequest& req, const nn::NetParams& net, const DesignOptions& opts) {
    return design(req, fcnn_model(std::make_shared<const nn::NetParams>(net)), opts);
}

Verification verify(const DesignCandidate& c, const FlowField& solver_field, double tol,
                    const TracerModeOptions& tracer) {
    const DldParams& p = solver_field.params();
    if (p.f != c.f || p.n != c.n || p.re != c.re) throw ArgumentError("solver field does not match the design point");
    Verification v;
    v.dc_surrogate_um = c.dc_um;
    const CriticalResult cr = critical_diameter_for(solver_field, tol, tracer);
    v.evaluations = cr.evaluations;
    if (!cr.d_c) {
        v.e_pct = std::numeric_limits<double>::infinity();
        return v;
    }
    v.dc_solver_um = physical_dc(*cr.d_c, c.f, c.gap_um);
    v.e_pct = 100.0 * std::abs(*v.dc_solver_um - c.dc_um) / *v.dc_solver_um;
    return v;
}

Verification verify(const DesignCandidate& c, const SolverConfig& solver, double tol, const TracerModeOptions& tracer) {
    return verify(c, solve_flow(DldParams::make(c.f, c.n, c.re), solver), tol, tracer);
}

std::vector<ParticleRun> simulate_device(const DesignCandidate& c, const FlowField& field,
                                         const std::vector<double>& diameters_um, int periods) {
    if (periods < 1) throw ArgumentError("periods must be at least 1");
    const CellGeometry geom = unit_cell(DldParams::make(c.f, c.n, c.re));
    const WallField wf = wall_distance_field(geom, std::max(32, field.res()));
    std::vector<ParticleRun> out;
    for (double dum : diameters_um) {
        ParticleRun r;
        r.diameter_um = dum;
        r.diameter = dum * (1.0 - c.f) / c.gap_um;
        if (!(r.diameter > 0.0) || r.diameter >= geom.gap_fraction()) {
            throw PlacementError("particle of " + fmt4(dum) + " um does not fit through the " + fmt4(c.gap_um) +
                                 " um gap");
        }
        r.trajectory = trace(field, wf, release_point(geom, r.diameter), r.diameter, periods);
        r.recurrence = recurrence_map(r.trajectory, c.n);
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

json constraint_json(const Constraint& c) {
    json j = {{"directive", directive_name(c.kind)}};
    if (c.kind == Directive::Fixed) j["value"] = c.value;
    return j;
}

Constraint constraint_from(const json& j) {
    Constraint c;
    if (j.is_string()) {
        c.kind = directive_from_name(j.get<std::string>());
        return c;
    }
    c.kind = directive_from_name(j.value("directive", std::string("free")));
    if (c.kind == Directive::Fixed) c.value = j.at("value").get<double>();
    return c;
}

DesignCandidate candidate_from(const json& j) {
    DesignCandidate c;
    c.f = j.at("f");
    c.n = j.at("N");
    c.re = j.at("Re");
    c.gap_um = j.at("G_um");
    c.dc_um = j.at("Dc_um");
    c.bw_um = j.at("BW_um");
    c.stab.value = j.at("stability_um_per_Re");
    c.stab.one_sided = j.value("stability_one_sided", false);
    c.objectives = j.value("objectives", Vec{});
    return c;
}

}  // namespace

json request_to_json(const DesignRequest& r) {
    return {{"D1_um", r.d1_um}, {"D2_um", r.d2_um}, {"phi", r.phi},     {"C_f", constraint_json(r.cf)},
            {"C_N", constraint_json(r.cn)}, {"C_Re", constraint_json(r.cre)}, {"periods", r.periods}};
}

DesignRequest request_from_json(const json& j) {
    try {
        DesignRequest r;
        r.d1_um = j.at("D1_um");
        r.d2_um = j.at("D2_um");
        r.phi = j.value("phi", 0.0);
        if (j.contains("C_f")) r.cf = constraint_from(j["C_f"]);
        if (j.contains("C_N")) r.cn = constraint_from(j["C_N"]);
        if (j.contains("C_Re")) r.cre = constraint_from(j["C_Re"]);
        r.periods = j.value("periods", 10);
        return r;
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("malformed design request: ") + e.what());
    }
}

json candidate_to_json(const DesignCandidate& c) {
    return {{"f", c.f},
            {"N", c.n},
            {"Re", c.re},
            {"G_um", c.gap_um},
            {"Dc_um", c.dc_um},
            {"BW_um", c.bw_um},
            {"stability_um_per_Re", c.stab.value},
            {"stability_one_sided", c.stab.one_sided},
            {"objectives", c.objectives}};
}

json result_to_json(const DesignResult& r) {
    json j = candidate_to_json(r.best);
    j["request"] = request_to_json(r.request);
    j["E_pct"] = r.e_pct ? json(*r.e_pct) : json(nullptr);
    j["Dc_solver_um"] = r.dc_solver_um ? json(*r.dc_solver_um) : json(nullptr);
    j["archive_size"] = r.archive.size();
    return j;
}

DesignResult result_from_json(const json& j) {
    try {
        DesignResult r;
        r.best = candidate_from(j);
        if (j.contains("request")) r.request = request_from_json(j["request"]);
        if (j.contains("E_pct") && !j["E_pct"].is_null()) r.e_pct = j["E_pct"].get<double>();
        if (j.contains("Dc_solver_um") && !j["Dc_solver_um"].is_null()) r.dc_solver_um = j["Dc_solver_um"].get<double>();
        return r;
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("malformed design result: ") + e.what());
    }
}

std::string archive_csv(const std::vector<DesignCandidate>& archive) {
    std::ostringstream s;
    s << "f,N,Re,G_um,Dc_um,BW_um,stability,obj_target,obj_phi,obj_directive\n";
    for (const DesignCandidate& c : archive) {
        s << fmt17(c.f) << ',' << c.n << ',' << fmt17(c.re) << ',' << fmt17(c.gap_um) << ',' << fmt17(c.dc_um) << ','
          << fmt17(c.bw_um) << ',' << fmt17(c.stab.value);
        for (double o : c.objectives) s << ',' << fmt17(o);
        s << '\n';
    }
    return s.str();
}

void write_report(const fs::path& dir, const DesignResult& result, const DcModel& model,
                  const std::vector<ParticleRun>& runs) {
    fs::create_directories(dir);
    write_json(dir / "result.json", result_to_json(result));
    write_text(dir / "pareto.csv", archive_csv(result.archive));

    const DesignCandidate& b = result.best;
    const std::vector<double>& res = bandwidth_re_grid();
    std::vector<DldParams> ps;
    for (double re : res) ps.push_back(point(b.f, b.n, re));
    const std::vector<double> d = model(ps);
    SvgSeries curve{"D_c", res, {}, true};
    std::string csv = "Re,Dc_um\n";
    for (std::size_t k = 0; k < res.size(); ++k) {
        curve.y.push_back(physical_dc(d[k], b.f, b.gap_um));
        csv += fmt17(res[k]) + ',' + fmt17(curve.y.back()) + '\n';
    }
    write_text(dir / "dc_curve.csv", csv);
    const SvgSeries lo{"D1", {res.front(), res.back()}, {result.request.d1_um, result.request.d1_um}};
    const SvgSeries hi{"D2", {res.front(), res.back()}, {result.request.d2_um, result.request.d2_um}};
    write_text(dir / "dc_curve.svg",
               svg_line_plot("Critical diameter, f=" + fmt4(b.f) + " N=" + std::to_string(b.n) + " G=" + fmt4(b.gap_um) +
                                 " um",
                             "Re", "D_c (um)", {curve, lo, hi}));

    std::vector<SvgSeries> paths;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const ParticleRun& r = runs[k];
        const std::string stem = "particle_" + std::to_string(k);
        write_text(dir / (stem + "_trajectory.csv"), trajectory_csv(r.trajectory));
        write_text(dir / (stem + "_recurrence.csv"), recurrence_csv(r.recurrence));
        SvgSeries s{fmt4(r.diameter_um) + " um " + mode_name(r.trajectory.mode), {}, {}};
        // Physical micrometres along the device.
        const double scale = b.gap_um / (1.0 - b.f);
        const std::size_t stride = std::max<std::size_t>(1, r.trajectory.points.size() / 2000);
        for (std::size_t i = 0; i < r.trajectory.points.size(); i += stride) {
            s.x.push_back(r.trajectory.points[i].x * scale);
            s.y.push_back(r.trajectory.points[i].y * scale);
        }
        paths.push_back(std::move(s));
    }
    if (!runs.empty()) {
        write_text(dir / "trajectories.svg",
                   svg_line_plot("Particle trajectories", "x (um)", "y (um)", paths, false));
    }
}

}  // namespace dld
