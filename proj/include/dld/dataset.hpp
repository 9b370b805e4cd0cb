#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dld/critical.hpp"
#include "dld/flow.hpp"
#include "dld/io.hpp"
#include "dld/rng.hpp"

namespace dld {

namespace nn {
struct NetParams;
}

enum class Split { None, Train, Dev, Test };
const char* split_name(Split s);
Split split_from_name(const std::string& s);

struct DataRecord {
    DldParams params;
    std::string field;             ///< field stem relative to the manifest directory ("" if not stored)
    std::optional<double> d_c;     ///< unit-cell lengths; absent when no separation exists
    Split split = Split::None;
    bool augmented = false;
    int evaluations = 0;           ///< particle traces used by the bisection
};

struct FailureRecord {
    DldParams params;
    std::string reason;
};

struct DatasetManifest {
    int res = 0;
    std::uint64_t split_seed = 0;
    std::vector<DataRecord> records;
    std::vector<FailureRecord> failures;
};

struct SweepSpec {
    std::vector<double> f;
    std::vector<int> n;
    std::vector<double> re;
};

/// lo, lo + step, ... up to hi inclusive (values rounded to 12 decimals).
std::vector<double> f_range(double lo, double hi, double step);

/// Cartesian product in f-major, then N, then Re order. Throws ArgumentError on
/// an empty axis and RangeError for values outside the hull.
std::vector<DldParams> generate_grid(const SweepSpec& spec);

SweepSpec paper_grid();       ///< 26 f x 8 N x 10 Re
SweepSpec paper_test_grid();  ///< 9 f x 4 N x 6 Re
SweepSpec desk_grid();        ///< 6 f x 5 N x 5 Re

/// Re values for augmentation: evenly spaced over [0.01, 25] with
/// floor(24.99 / step) points (50 for the paper's 0.499).
std::vector<double> fine_re_grid(double step);

struct BuildOptions {
    SolverConfig solver;
    double tol = kDefaultCriticalTol;
    TracerModeOptions tracer;
    std::filesystem::path out_dir;  ///< empty: keep nothing on disk
    int jobs = 0;                   ///< 0: hardware concurrency (capped by DLD_FORGE_THREADS)
    Split assign = Split::None;     ///< split label given to every record (Test for a held-out grid)
    /// Called after each configuration finishes, from the worker thread.
    std::function<void(std::size_t index, const DldParams&, const std::string& status)> progress;
};

/// Solves, extracts d_c and persists every configuration. Failures are listed
/// in the manifest (and failures.csv), never dropped silently.
DatasetManifest build_dataset(const std::vector<DldParams>& configs, const BuildOptions& opts);

/// Uniform seeded train/dev assignment of the records not marked Test;
/// exactly round(dev_fraction * pool) records go to dev.
DatasetManifest split(DatasetManifest manifest, double dev_fraction, std::uint64_t seed);

json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const json& j);
/// Writes manifest.json and failures.csv into dir.
void save_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& dir);

/// Loads the stored field of a record (paths are relative to the manifest dir).
FlowField load_record_field(const std::filesystem::path& dir, const DataRecord& r);

struct AugmentOptions {
    double tol = kDefaultCriticalTol;
    TracerModeOptions tracer;
    std::filesystem::path out_dir;  ///< empty: nothing written; otherwise predicted fields + manifest
    int jobs = 0;
    /// A prediction whose peak speed exceeds this multiple of the training maximum is rejected.
    double divergence_factor = 10.0;
    std::function<void(std::size_t index, const DldParams&, const std::string& status)> progress;
};

/// Every (f, N) pair of the f and N axes of a sweep, f-major.
std::vector<std::pair<double, int>> base_pairs(const SweepSpec& spec);

/// Labels (f, N, Re) points with d_c extracted from field-network predictions.
/// Records are marked augmented; rejected predictions are listed as failures.
DatasetManifest augment(const nn::NetParams& field_net, const std::vector<std::pair<double, int>>& base,
                        const std::vector<double>& re_values, const AugmentOptions& opts = {});
/// Same, with Re on fine_re_grid(fine_re_step).
DatasetManifest augment(const nn::NetParams& field_net, const std::vector<std::pair<double, int>>& base,
                        double fine_re_step, const AugmentOptions& opts = {});

}  // namespace dld
