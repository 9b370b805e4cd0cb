#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dld/automation.hpp"
#include "dld/critical.hpp"
#include "dld/dataset.hpp"
#include "dld/errors.hpp"
#include "dld/io.hpp"
#include "dld/surrogate.hpp"
#include "dld/tracer.hpp"
#include "dld/walls.hpp"

using namespace dld;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
    int jobs = 0;
    bool verbose = false;
};

struct Point {
    double f = 0.5;
    int n = 5;
    double re = 1.0;
    int res = 96;
    double tol = kDefaultCriticalTol;
    int periods = 3;
};

struct SweepOpts {
    std::string grid = "desk";
    std::string f_values, n_values, re_values;
    double dev_fraction = 0.2;
    std::string assign = "none";
};

struct TrainOpts {
    std::string data;
    int hidden = 8;
    int width = 128;
    int net_res = 32;
    int base = 64;
    int batch = 64;
    std::string schedule;
};

struct AugmentOpts {
    std::string model;
    double re_step = 0.499;
};

struct DesignOpts {
    std::string model;
    double d1 = 5.0, d2 = 8.0, phi = 0.0;
    std::string cf = "free", cn = "free", cre = "free";
    int pop = 260;
    int generations = 60;
    int directions = 5;
    double g_lo = 5.0, g_hi = 40.0;
};

struct ReportOpts {
    std::string design;
    std::string model;
    std::string diameters = "5,8";
    int periods = 10;
};

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ArgumentError("cannot parse '" + item + "' as a number");
        out.push_back(v);
    }
    return out;
}

std::vector<std::pair<int, double>> parse_schedule(const std::string& s) {
    std::vector<std::pair<int, double>> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ArgumentError("schedule entries look like EPOCHS:RATE, got '" + item + "'");
        try {
            out.emplace_back(std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
        } catch (const std::exception&) {
            throw ArgumentError("cannot parse schedule entry '" + item + "'");
        }
    }
    return out;
}

Constraint parse_constraint(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) return {directive_from_name(s), 0.0};
    if (s.substr(0, colon) != "fixed") throw ArgumentError("only 'fixed' takes a value: '" + s + "'");
    try {
        return {Directive::Fixed, std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ArgumentError("cannot parse the value in '" + s + "'");
    }
}

/// Config-file keys become "--key value" arguments placed before the user's own
/// flags; with take-last semantics the command line wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty() || args.size() < 2) return args;
    json cfg;
    try {
        cfg = read_json(path);
    } catch (const Error& e) {
        throw ArgumentError(e.what());
    }
    if (!cfg.is_object()) throw ArgumentError("config file must hold a JSON object");
    std::vector<std::string> out{args[0], args[1]};
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config") continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back("--" + key);
        } else if (value.is_string()) {
            out.push_back("--" + key);
            out.push_back(value.get<std::string>());
        } else if (value.is_number_integer()) {
            out.push_back("--" + key);
            out.push_back(std::to_string(value.get<long long>()));
        } else if (value.is_number()) {
            out.push_back("--" + key);
            out.push_back(fmt17(value.get<double>()));
        } else if (value.is_array()) {
            std::string joined;
            for (const json& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
            out.push_back("--" + key);
            out.push_back(joined);
        } else {
            throw ArgumentError("unsupported value for config key '" + key + "'");
        }
    }
    out.insert(out.end(), args.begin() + 2, args.end());
    return out;
}

json typed(const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used == v.size()) return i;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    return v;
}

json resolved_config(const CLI::App* sub) {
    json j = json::object();
    j["command"] = sub->get_name();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        if (opt->get_items_expected_max() == 0) {
            j[name] = opt->count() > 0;
            continue;
        }
        const std::string v = opt->count() > 0 ? opt->results().back() : opt->get_default_str();
        j[name] = typed(v);
    }
    return j;
}

class Runner {
public:
    Runner(const Common& c, const CLI::App* sub) : c_(c) {
        out_ = c.out.empty() ? fs::path("dld-forge-out") / sub->get_name() : fs::path(c.out);
        fs::create_directories(out_);
        write_json(out_ / "config.resolved.json", resolved_config(sub));
    }
    const fs::path& out() const { return out_; }
    std::function<void(std::size_t, const DldParams&, const std::string&)> progress() const {
        if (!c_.verbose) return nullptr;
        return [](std::size_t i, const DldParams& p, const std::string& status) {
            std::cerr << "[" << i << "] f=" << fmt4(p.f) << " N=" << p.n << " Re=" << fmt4(p.re) << ": " << status
                      << '\n';
        };
    }

private:
    const Common& c_;
    fs::path out_;
};

SolverConfig solver_cfg(const Point& p) {
    SolverConfig s;
    s.res = p.res;
    return s;
}

void print_field_summary(const FlowField& f) {
    std::cout << "res " << f.res() << ", achieved Re " << fmt4(f.achieved_re()) << ", max speed " << fmt4(f.max_speed())
              << '\n';
}

SweepSpec sweep_spec(const SweepOpts& s) {
    SweepSpec spec;
    if (s.grid == "desk") spec = desk_grid();
    else if (s.grid == "paper") spec = paper_grid();
    else if (s.grid == "paper-test") spec = paper_test_grid();
    else if (s.grid != "custom") throw ArgumentError("unknown grid '" + s.grid + "' (desk, paper, paper-test, custom)");
    if (!s.f_values.empty()) spec.f = parse_list(s.f_values);
    if (!s.n_values.empty()) {
        spec.n.clear();
        for (double v : parse_list(s.n_values)) {
            if (v != std::round(v)) throw ArgumentError("N values must be integers");
            spec.n.push_back(static_cast<int>(v));
        }
    }
    if (!s.re_values.empty()) spec.re = parse_list(s.re_values);
    return spec;
}

nn::TrainConfig train_cfg(const TrainOpts& t, nn::TrainConfig base, std::uint64_t seed) {
    base.batch_size = t.batch;
    base.seed = seed;
    if (!t.schedule.empty()) base.schedule = parse_schedule(t.schedule);
    return base;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON file with option values (flags override)");
    sub->add_option("--out", c.out, "output directory (default dld-forge-out/<command>)");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--jobs", c.jobs, "worker threads (0: all cores, capped by DLD_FORGE_THREADS)");
    sub->add_flag("-v,--verbose", c.verbose, "progress on stderr");
}

void add_point(CLI::App* sub, Point& p, bool with_re = true) {
    sub->add_option("--f", p.f, "pillar fraction 2R/(2R+G)");
    sub->add_option("--n", p.n, "period number N");
    if (with_re) sub->add_option("--re", p.re, "Reynolds number");
    sub->add_option("--res", p.res, "grid resolution");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dld-forge: DLD flow, particle tracing, surrogate training and design automation"};
    app.name("dld-forge");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

    Common common;
    Point pt;
    double diameter = 0.2;
    SweepOpts sw;
    TrainOpts tr;
    AugmentOpts au;
    DesignOpts de;
    ReportOpts rp;
    std::string verify_design;

    auto* solve = app.add_subcommand("solve", "solve the unit-cell flow for one configuration");
    add_common(solve, common);
    add_point(solve, pt);

    auto* walls = app.add_subcommand("walls", "wall distance and normal field for one cell");
    add_common(walls, common);
    add_point(walls, pt, false);

    auto* trc = app.add_subcommand("trace", "trace one particle");
    add_common(trc, common);
    add_point(trc, pt);
    trc->add_option("--d", diameter, "particle diameter in unit-cell lengths");
    trc->add_option("--periods", pt.periods, "array periods to traverse");

    auto* dc = app.add_subcommand("dc", "critical diameter for one configuration");
    add_common(dc, common);
    add_point(dc, pt);
    dc->add_option("--tol", pt.tol, "bisection tolerance");

    auto* sweep = app.add_subcommand("sweep", "build a labelled dataset");
    add_common(sweep, common);
    sweep->add_option("--res", pt.res, "grid resolution");
    sweep->add_option("--tol", pt.tol, "bisection tolerance");
    sweep->add_option("--grid", sw.grid, "desk, paper, paper-test or custom");
    sweep->add_option("--f-values", sw.f_values, "comma-separated f values (overrides the grid)");
    sweep->add_option("--n-values", sw.n_values, "comma-separated N values");
    sweep->add_option("--re-values", sw.re_values, "comma-separated Re values");
    sweep->add_option("--dev-fraction", sw.dev_fraction, "dev share of the non-test records");
    sweep->add_option("--assign", sw.assign, "none or test (marks every record as held out)");

    auto* tdirect = app.add_subcommand("train-direct", "train the direct critical-diameter network");
    add_common(tdirect, common);
    tdirect->add_option("--data", tr.data, "dataset directory")->required();
    tdirect->add_option("--hidden", tr.hidden, "hidden layers");
    tdirect->add_option("--width", tr.width, "neurons per hidden layer");
    tdirect->add_option("--batch", tr.batch, "batch size");
    tdirect->add_option("--schedule", tr.schedule, "EPOCHS:RATE[,EPOCHS:RATE...] (default 1000:1e-4)");

    auto* tfield = app.add_subcommand("train-field", "train the velocity-field network");
    add_common(tfield, common);
    tfield->add_option("--data", tr.data, "dataset directory")->required();
    tfield->add_option("--net-res", tr.net_res, "network resolution (32, 64 or 128)");
    tfield->add_option("--base", tr.base, "base filter count");
    tfield->add_option("--batch", tr.batch, "batch size");
    tfield->add_option("--schedule", tr.schedule, "EPOCHS:RATE[,...] (default 100:2e-3,100:2e-4)");

    auto* aug = app.add_subcommand("augment", "label a fine Re grid from field-network predictions");
    add_common(aug, common);
    aug->add_option("--model", au.model, "field network file")->required();
    aug->add_option("--tol", pt.tol, "bisection tolerance");
    aug->add_option("--grid", sw.grid, "grid supplying the (f, N) pairs");
    aug->add_option("--f-values", sw.f_values, "comma-separated f values");
    aug->add_option("--n-values", sw.n_values, "comma-separated N values");
    aug->add_option("--re-step", au.re_step, "fine Re step");

    auto* des = app.add_subcommand("design", "optimise a device for a separation request");
    add_common(des, common);
    des->add_option("--model", de.model, "direct network file")->required();
    des->add_option("--d1", de.d1, "smaller particle diameter (um)");
    des->add_option("--d2", de.d2, "larger particle diameter (um)");
    des->add_option("--phi", de.phi, "flexibility (1) versus stability (0)");
    des->add_option("--cf", de.cf, "f directive: free, min, max or fixed:VALUE");
    des->add_option("--cn", de.cn, "N directive");
    des->add_option("--cre", de.cre, "Re directive");
    des->add_option("--pop", de.pop, "population size");
    des->add_option("--generations", de.generations, "generations");
    des->add_option("--directions", de.directions, "reference directions");
    des->add_option("--g-min", de.g_lo, "smallest gap G (um)");
    des->add_option("--g-max", de.g_hi, "largest gap G (um)");

    auto* ver = app.add_subcommand("verify", "check a design against the flow solver");
    add_common(ver, common);
    ver->add_option("--design", verify_design, "design.json from the design command")->required();
    ver->add_option("--res", pt.res, "solver resolution");
    ver->add_option("--tol", pt.tol, "bisection tolerance");

    auto* rep = app.add_subcommand("report", "CSV/SVG bundle with trajectories for a design");
    add_common(rep, common);
    rep->add_option("--design", rp.design, "design.json")->required();
    rep->add_option("--model", rp.model, "direct network file")->required();
    rep->add_option("--diameters", rp.diameters, "comma-separated particle diameters (um)");
    rep->add_option("--periods", rp.periods, "array periods to simulate");
    rep->add_option("--res", pt.res, "solver resolution");

    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::vector<const char*> cargs;
    for (const std::string& a : args) cargs.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    const CLI::App* sub = app.get_subcommands().front();
    try {
        Runner run(common, sub);
        const fs::path& out = run.out();
        if (sub == solve) {
            const FlowField f = solve_flow(DldParams::make(pt.f, pt.n, pt.re), solver_cfg(pt));
            save_field(out / "field", f);
            print_field_summary(f);
        } else if (sub == walls) {
            const WallField wf = wall_distance_field(unit_cell(DldParams::make(pt.f, pt.n, 1.0)), pt.res);
            save_wall_field(out / "walls", wf);
            std::cout << "wall field " << wf.res << " x " << wf.res << " written to " << (out / "walls").string() << '\n';
        } else if (sub == trc) {
            const FlowField f = solve_flow(DldParams::make(pt.f, pt.n, pt.re), solver_cfg(pt));
            const CellGeometry g = unit_cell(f.params());
            const WallField wf = wall_distance_field(g, std::max(32, pt.res));
            const Trajectory t = trace(f, wf, release_point(g, diameter), diameter, pt.periods);
            write_text(out / "trajectory.csv", trajectory_csv(t));
            write_text(out / "recurrence.csv", recurrence_csv(recurrence_map(t, pt.n)));
            std::cout << "mode " << mode_name(t.mode) << ", " << t.points.size() << " points, " << t.contacts.size()
                      << " contacts\n";
        } else if (sub == dc) {
            const FlowField f = solve_flow(DldParams::make(pt.f, pt.n, pt.re), solver_cfg(pt));
            const CriticalResult r = critical_diameter_for(f, pt.tol);
            json j = {{"f", pt.f}, {"N", pt.n}, {"Re", pt.re}, {"res", pt.res}, {"evaluations", r.evaluations}};
            j["d_c"] = r.d_c ? json(*r.d_c) : json(nullptr);
            j["warnings"] = r.warnings;
            write_json(out / "dc.json", j);
            std::cout << "d_c " << (r.d_c ? fmt17(*r.d_c) : std::string("absent")) << "\nevaluations " << r.evaluations
                      << '\n';
            for (const std::string& w : r.warnings) std::cerr << "warning: " << w << '\n';
        } else if (sub == sweep) {
            BuildOptions o;
            o.solver.res = pt.res;
            o.tol = pt.tol;
            o.out_dir = out;
            o.jobs = common.jobs;
            o.progress = run.progress();
            if (sw.assign == "test") o.assign = Split::Test;
            else if (sw.assign != "none") throw ArgumentError("--assign takes none or test");
            DatasetManifest m = build_dataset(generate_grid(sweep_spec(sw)), o);
            if (o.assign != Split::Test && !m.records.empty()) m = split(m, sw.dev_fraction, common.seed);
            save_manifest(out, m);
            std::size_t labelled = 0;
            for (const DataRecord& r : m.records) labelled += r.d_c.has_value();
            std::cout << m.records.size() << " records (" << labelled << " with d_c), " << m.failures.size()
                      << " failures\n";
            if (!m.failures.empty()) return 2;
        } else if (sub == tdirect) {
            const DatasetManifest m = load_manifest(tr.data);
            nn::TrainConfig cfg = train_cfg(tr, fcnn_default_config(), common.seed);
            if (common.verbose) {
                cfg.on_epoch = [](int e, double t, double d) {
                    if ((e + 1) % 100 == 0) std::cerr << "epoch " << e + 1 << " train " << fmt4(t) << " dev " << fmt4(d) << '\n';
                };
            }
            const nn::NetParams net = fcnn_train(m, cfg, tr.hidden, tr.width);
            nn::save_model(out / "direct.model", net);
            write_text(out / "loss.csv", nn::loss_csv(net.meta));
            std::cout << "parameters " << net.param_count() << ", train loss " << fmt4(net.meta.train_loss.back());
            if (!net.meta.dev_loss.empty()) std::cout << ", dev loss " << fmt4(net.meta.dev_loss.back());
            std::cout << '\n';
        } else if (sub == tfield) {
            const DatasetManifest m = load_manifest(tr.data);
            nn::TrainConfig cfg = train_cfg(tr, cnn_default_config(), common.seed);
            if (common.verbose) {
                cfg.on_epoch = [](int e, double t, double d) {
                    std::cerr << "epoch " << e + 1 << " train " << fmt4(t) << " dev " << fmt4(d) << '\n';
                };
            }
            const nn::NetParams net = cnn_train(m, tr.data, cfg, tr.net_res, tr.base);
            nn::save_model(out / "field.model", net);
            write_text(out / "loss.csv", nn::loss_csv(net.meta));
            std::cout << "parameters " << net.param_count() << " (" << net.branch_param_count(0)
                      << " per branch), train loss " << fmt4(net.meta.train_loss.back()) << '\n';
        } else if (sub == aug) {
            const nn::NetParams net = nn::load_model(au.model);
            AugmentOptions o;
            o.tol = pt.tol;
            o.out_dir = out;
            o.jobs = common.jobs;
            o.progress = run.progress();
            const DatasetManifest m = augment(net, base_pairs(sweep_spec(sw)), au.re_step, o);
            save_manifest(out, m);
            std::cout << m.records.size() << " augmented records, " << m.failures.size() << " rejected\n";
        } else if (sub == des) {
            DesignRequest req;
            req.d1_um = de.d1;
            req.d2_um = de.d2;
            req.phi = de.phi;
            req.cf = parse_constraint(de.cf);
            req.cn = parse_constraint(de.cn);
            req.cre = parse_constraint(de.cre);
            DesignOptions o;
            o.pop_size = de.pop;
            o.generations = de.generations;
            o.directions = static_cast<std::size_t>(std::max(1, de.directions));
            o.seed = common.seed;
            o.jobs = common.jobs;
            o.gap_lo_um = de.g_lo;
            o.gap_hi_um = de.g_hi;
            const nn::NetParams net = nn::load_model(de.model);
            const DesignResult r = design(req, net, o);
            write_json(out / "design.json", result_to_json(r));
            write_text(out / "pareto.csv", archive_csv(r.archive));
            std::cout << result_to_json(r).dump(2) << '\n';
        } else if (sub == ver) {
            DesignResult r = result_from_json(read_json(verify_design));
            const Verification v = verify(r.best, solver_cfg(pt), pt.tol);
            r.e_pct = v.e_pct;
            r.dc_solver_um = v.dc_solver_um;
            write_json(out / "design.json", result_to_json(r));
            std::cout << "D_c surrogate " << fmt4(v.dc_surrogate_um) << " um, solver "
                      << (v.dc_solver_um ? fmt4(*v.dc_solver_um) + " um" : std::string("absent")) << ", E "
                      << fmt4(v.e_pct) << " %\n";
        } else if (sub == rep) {
            DesignResult r = result_from_json(read_json(rp.design));
            const auto net = std::make_shared<const nn::NetParams>(nn::load_model(rp.model));
            const DesignCandidate& c = r.best;
            SolverConfig s = solver_cfg(pt);
            const FlowField f = solve_flow(DldParams::make(c.f, c.n, c.re), s);
            const std::vector<ParticleRun> runs = simulate_device(c, f, parse_list(rp.diameters), rp.periods);
            write_report(out, r, fcnn_model(net), runs);
            for (const ParticleRun& p : runs)
                std::cout << fmt4(p.diameter_um) << " um: " << mode_name(p.trajectory.mode) << '\n';
        }
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const RangeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
