#include "dld/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include "dld/errors.hpp"
#include "dld/parallel.hpp"

namespace dld {

namespace fs = std::filesystem;

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
        default: return "none";
    }
}

Split split_from_name(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    if (s == "none") return Split::None;
    throw IoError("unknown split label '" + s + "'");
}

std::vector<double> f_range(double lo, double hi, double step) {
    if (!(step > 0.0)) throw ArgumentError("range step must be positive");
    std::vector<double> out;
    const long count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= count; ++k) out.push_back(std::round((lo + k * step) * 1e12) / 1e12);
    return out;
}

std::vector<DldParams> generate_grid(const SweepSpec& spec) {
    if (spec.f.empty() || spec.n.empty() || spec.re.empty()) {
        throw ArgumentError("sweep specification has an empty axis");
    }
    std::vector<DldParams> out;
    out.reserve(spec.f.size() * spec.n.size() * spec.re.size());
    for (double f : spec.f)
        for (int n : spec.n)
            for (double re : spec.re) out.push_back(DldParams::make(f, n, re));
    return out;
}

SweepSpec paper_grid() {
    return {f_range(0.25, 0.75, 0.02), {3, 4, 5, 6, 7, 8, 9, 10}, {0.01, 0.1, 1, 2.5, 5, 7.5, 10, 15, 20, 25}};
}

SweepSpec paper_test_grid() {
    return {f_range(0.25, 0.75, 0.06), {3, 4, 5, 6}, {0.05, 1.5, 6.5, 8.5, 12.5, 18.5}};
}

SweepSpec desk_grid() {
    return {f_range(0.25, 0.75, 0.1), {3, 4, 5, 7, 10}, {0.01, 2.5, 7.5, 15, 25}};
}

std::vector<double> fine_re_grid(double step) {
    if (!(step > 0.0)) throw ArgumentError("Re step must be positive");
    const int count = std::max(2, static_cast<int>(std::floor((hull::re_max - hull::re_min) / step + 1e-9)));
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k)
        out[k] = hull::re_min + (hull::re_max - hull::re_min) * k / (count - 1);
    out.back() = hull::re_max;
    return out;
}

DatasetManifest build_dataset(const std::vector<DldParams>& configs, const BuildOptions& opts) {
    DatasetManifest m;
    m.res = opts.solver.res;
    struct Slot {
        std::optional<DataRecord> rec;
        std::string error;
    };
    std::vector<Slot> slots(configs.size());
    const bool persist = !opts.out_dir.empty();
    if (persist) fs::create_directories(opts.out_dir / "fields");

    parallel_for(configs.size(), worker_count(opts.jobs, configs.size()), [&](std::size_t i) {
        const DldParams& p = configs[i];
        Slot& slot = slots[i];
        try {
            const FlowField field = solve_flow(p, opts.solver);
            const CriticalResult cr = critical_diameter_for(field, opts.tol, opts.tracer);
            DataRecord r;
            r.params = p;
            r.d_c = cr.d_c;
            r.split = opts.assign;
            r.evaluations = cr.evaluations;
            if (persist) {
                char name[32];
                std::snprintf(name, sizeof name, "fields/%05zu", i);
                r.field = name;
                save_field(opts.out_dir / r.field, field, r.d_c);
            }
            slot.rec = std::move(r);
        } catch (const Error& e) {
            slot.error = e.what();
        }
        if (opts.progress) opts.progress(i, p, slot.rec ? "ok" : "failed: " + slot.error);
    });

    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (slots[i].rec) {
            m.records.push_back(std::move(*slots[i].rec));
        } else {
            m.failures.push_back({configs[i], slots[i].error});
        }
    }
    if (persist && !configs.empty()) save_manifest(opts.out_dir, m);
    return m;
}

DatasetManifest split(DatasetManifest manifest, double dev_fraction, std::uint64_t seed) {
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw ArgumentError("dev_fraction must lie in (0, 1)");
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < manifest.records.size(); ++i)
        if (manifest.records[i].split != Split::Test) pool.push_back(i);
    const auto dev = static_cast<std::size_t>(std::llround(dev_fraction * static_cast<double>(pool.size())));
    const std::vector<std::size_t> perm = seeded_permutation(pool.size(), seed);
    for (std::size_t k = 0; k < pool.size(); ++k)
        manifest.records[pool[perm[k]]].split = k < dev ? Split::Dev : Split::Train;
    manifest.split_seed = seed;
    return manifest;
}

json manifest_to_json(const DatasetManifest& m) {
    json recs = json::array();
    for (const DataRecord& r : m.records) {
        json j = {{"f", r.params.f}, {"N", r.params.n}, {"Re", r.params.re}, {"field", r.field},
                  {"split", split_name(r.split)}, {"augmented", r.augmented}, {"evaluations", r.evaluations}};
        j["d_c"] = r.d_c ? json(*r.d_c) : json(nullptr);
        recs.push_back(std::move(j));
    }
    json fails = json::array();
    for (const FailureRecord& f : m.failures)
        fails.push_back({{"f", f.params.f}, {"N", f.params.n}, {"Re", f.params.re}, {"reason", f.reason}});
    return {{"res", m.res}, {"split_seed", m.split_seed}, {"records", recs}, {"failures", fails}};
}

DatasetManifest manifest_from_json(const json& j) {
    try {
        DatasetManifest m;
        m.res = j.at("res").get<int>();
        m.split_seed = j.at("split_seed").get<std::uint64_t>();
        for (const json& r : j.at("records")) {
            DataRecord d;
            d.params = DldParams::make(r.at("f").get<double>(), r.at("N").get<int>(), r.at("Re").get<double>());
            d.field = r.at("field").get<std::string>();
            if (!r.at("d_c").is_null()) d.d_c = r.at("d_c").get<double>();
            d.split = split_from_name(r.at("split").get<std::string>());
            d.augmented = r.value("augmented", false);
            d.evaluations = r.value("evaluations", 0);
            m.records.push_back(std::move(d));
        }
        for (const json& f : j.at("failures")) {
            m.failures.push_back({DldParams::make(f.at("f").get<double>(), f.at("N").get<int>(), f.at("Re").get<double>()),
                                  f.at("reason").get<std::string>()});
        }
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
}

void save_manifest(const fs::path& dir, const DatasetManifest& m) {
    write_json(dir / "manifest.json", manifest_to_json(m));
    std::ostringstream csv;
    csv << "f,N,Re,reason\n";
    for (const FailureRecord& f : m.failures) {
        std::string reason = f.reason;
        for (char& c : reason)
            if (c == '"') c = '\'';
        csv << fmt17(f.params.f) << ',' << f.params.n << ',' << fmt17(f.params.re) << ",\"" << reason << "\"\n";
    }
    write_text(dir / "failures.csv", csv.str());
}

DatasetManifest load_manifest(const fs::path& dir) { return manifest_from_json(read_json(dir / "manifest.json")); }

FlowField load_record_field(const fs::path& dir, const DataRecord& r) {
    if (r.field.empty()) throw IoError("record has no stored field");
    return load_field(dir / r.field).field;
}

}  // namespace dld
