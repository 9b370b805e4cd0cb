#include <cstdio>
#include <optional>

#include "dld/dataset.hpp"
#include "dld/errors.hpp"
#include "dld/parallel.hpp"
#include "dld/surrogate.hpp"

namespace dld {

namespace fs = std::filesystem;

std::vector<std::pair<double, int>> base_pairs(const SweepSpec& spec) {
    std::vector<std::pair<double, int>> out;
    for (double f : spec.f)
        for (int n : spec.n) out.emplace_back(f, n);
    return out;
}

DatasetManifest augment(const nn::NetParams& field_net, const std::vector<std::pair<double, int>>& base,
                        const std::vector<double>& re_values, const AugmentOptions& opts) {
    if (field_net.kind != "cnn") throw ArgumentError("augmentation needs a trained field network");
    std::vector<DldParams> configs;
    for (const auto& [f, n] : base)
        for (double re : re_values) configs.push_back(DldParams::make(f, n, re));

    const double limit = opts.divergence_factor * cnn_training_max_speed(field_net);
    const bool persist = !opts.out_dir.empty();
    if (persist) fs::create_directories(opts.out_dir / "fields");
    struct Slot {
        std::optional<DataRecord> rec;
        std::string error;
    };
    std::vector<Slot> slots(configs.size());
    parallel_for(configs.size(), worker_count(opts.jobs, configs.size()), [&](std::size_t i) {
        const DldParams& p = configs[i];
        Slot& slot = slots[i];
        try {
            const FlowField field = cnn_predict_field(field_net, p);
            const double peak = field.max_speed();
            if (!std::isfinite(peak) || (limit > 0.0 && peak > limit)) {
                throw Error("prediction diverged: peak speed " + fmt4(peak) + " exceeds " + fmt4(limit));
            }
            const CriticalResult cr = critical_diameter_for(field, opts.tol, opts.tracer);
            DataRecord r;
            r.params = p;
            r.d_c = cr.d_c;
            r.augmented = true;
            r.evaluations = cr.evaluations;
            if (persist) {
                char name[32];
                std::snprintf(name, sizeof name, "fields/a%05zu", i);
                r.field = name;
                save_field(opts.out_dir / r.field, field, r.d_c);
            }
            slot.rec = std::move(r);
        } catch (const Error& e) {
            slot.error = e.what();
        }
        if (opts.progress) opts.progress(i, p, slot.rec ? "ok" : "rejected: " + slot.error);
    });

    DatasetManifest m;
    m.res = field_net.extra.value("res", 0);
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

DatasetManifest augment(const nn::NetParams& field_net, const std::vector<std::pair<double, int>>& base,
                        double fine_re_step, const AugmentOptions& opts) {
    return augment(field_net, base, fine_re_grid(fine_re_step), opts);
}

}  // namespace dld
