#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dld/critical.hpp"
#include "dld/io.hpp"
#include "dld/nn/network.hpp"
#include "dld/optimizer.hpp"
#include "dld/tracer.hpp"

namespace dld {

/// Nondimensional d_c for a batch of parameter points.
using DcModel = std::function<std::vector<double>(const std::vector<DldParams>&)>;

/// Batched forward passes of a trained direct network.
DcModel fcnn_model(std::shared_ptr<const nn::NetParams> net);
/// Wraps a pointwise function (synthetic surrogates in tests).
DcModel pointwise_model(std::function<double(const DldParams&)> fn);

/// Physical critical diameter in micrometres: d_c * G / (1 - f).
double physical_dc(double d_c, double f, double gap_um);

/// The 50-point Re grid of the bandwidth sweep.
const std::vector<double>& bandwidth_re_grid();

/// max - min physical D_c over the Re grid at fixed (f, N, G).
double bandwidth(const DcModel& model, double f, int n, double gap_um);
double bandwidth(const nn::NetParams& net, double f, int n, double gap_um);

struct Stability {
    double value = 0.0;  ///< |dD_c/dRe| in micrometres per unit Re
    bool one_sided = false;
};

inline constexpr double kStabilityStep = 0.25;

/// Central difference with step 0.25; one-sided (and flagged) within a step of the Re bounds.
Stability stability(const DcModel& model, double f, int n, double re, double gap_um);
Stability stability(const nn::NetParams& net, double f, int n, double re, double gap_um);

enum class Directive { Free, Min, Max, Fixed };
const char* directive_name(Directive d);
Directive directive_from_name(const std::string& s);

struct Constraint {
    Directive kind = Directive::Free;
    double value = 0.0;  ///< used by Fixed
};

struct DesignRequest {
    double d1_um = 5.0;
    double d2_um = 8.0;
    double phi = 0.0;
    Constraint cf, cn, cre;
    int periods = 10;

    void validate() const;
};

struct DesignCandidate {
    double f = 0.0;
    int n = 0;
    double re = 0.0;
    double gap_um = 0.0;
    double dc_um = 0.0;
    double bw_um = 0.0;
    Stability stab;
    Vec objectives;
};

struct DesignResult {
    DesignRequest request;
    DesignCandidate best;
    std::optional<double> e_pct;
    std::optional<double> dc_solver_um;
    std::vector<DesignCandidate> archive;
};

struct DesignOptions {
    int pop_size = 260;
    int generations = 60;
    std::size_t directions = 5;
    std::uint64_t seed = 1;
    int jobs = 1;
    double gap_lo_um = 5.0;
    double gap_hi_um = 40.0;
    /// Candidates within this distance of the best target match count as tied.
    double target_tolerance_um = 0.005;
    std::filesystem::path archive_csv;
};

/// Decodes genes (f, N as a relaxed real, Re, G) and evaluates the three objectives.
DesignCandidate evaluate_design(const DcModel& model, const DesignRequest& req, const Vec& genes);

/// NSGA-III over (f, N, Re, G). Throws ArgumentError for an invalid request and
/// InfeasibleError when no candidate separates D1 from D2.
DesignResult design(const DesignRequest& req, const DcModel& model, const DesignOptions& opts = {});
DesignResult design(const DesignRequest& req, const nn::NetParams& net, const DesignOptions& opts = {});

struct Verification {
    double dc_surrogate_um = 0.0;
    std::optional<double> dc_solver_um;
    double e_pct = 0.0;  ///< infinite when the solver field shows no critical diameter
    int evaluations = 0;
};

/// Error of the surrogate D_c against a precomputed solver field.
Verification verify(const DesignCandidate& c, const FlowField& solver_field, double tol = kDefaultCriticalTol,
                    const TracerModeOptions& tracer = {});
/// Solves the flow at the design point first.
Verification verify(const DesignCandidate& c, const SolverConfig& solver, double tol = kDefaultCriticalTol,
                    const TracerModeOptions& tracer = {});

struct ParticleRun {
    double diameter_um = 0.0;
    double diameter = 0.0;  ///< unit-cell lengths
    Trajectory trajectory;
    RecurrenceMap recurrence;
};

/// Traces every diameter through `periods` array periods of the design's field.
std::vector<ParticleRun> simulate_device(const DesignCandidate& c, const FlowField& field,
                                         const std::vector<double>& diameters_um, int periods);

json request_to_json(const DesignRequest& r);
DesignRequest request_from_json(const json& j);
json candidate_to_json(const DesignCandidate& c);
json result_to_json(const DesignResult& r);
DesignResult result_from_json(const json& j);
std::string archive_csv(const std::vector<DesignCandidate>& archive);

/// result.json, pareto.csv, dc_curve.{csv,svg}, per-particle trajectory and
/// recurrence CSVs and a trajectory overlay SVG.
void write_report(const std::filesystem::path& dir, const DesignResult& result, const DcModel& model,
                  const std::vector<ParticleRun>& runs);

}  // namespace dld
