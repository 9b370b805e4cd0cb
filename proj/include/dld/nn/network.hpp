#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dld/nn/layers.hpp"

namespace dld::nn {

/// Per-feature affine map of a box onto [0, 1].
struct Normalization {
    std::vector<double> lo, hi;

    void apply(const double* raw, double* out) const;
    void invert(const double* scaled, double* out) const;
};

struct TrainMeta {
    int epochs = 0;
    std::uint64_t seed = 0;
    std::vector<double> train_loss;
    std::vector<double> dev_loss;  ///< NaN-free; empty when no dev set was given
};

/// Parallel branches fed by the same input; their outputs are concatenated.
using Branch = std::vector<LayerPtr>;

/**
 * Network structure plus one flat weight vector. Layers are immutable and may
 * be shared between copies; all trainable state sits in `weights`.
 */
struct NetParams {
    std::string kind;  ///< "fcnn" or "cnn"
    Shape input;
    std::vector<Branch> branches;
    std::vector<double> weights;
    Normalization input_normalization;
    TrainMeta meta;
    nlohmann::json extra = nlohmann::json::object();  ///< model-specific metadata

    std::size_t output_size() const;
    std::size_t param_count() const { return weights.size(); }
    std::size_t branch_param_count(std::size_t b) const;

    /// Assigns weight offsets; call after editing `branches`.
    void finalize_layout();
    /// He-uniform weights and zero biases from a seeded generator.
    void initialize(std::uint64_t seed);

    /// Forward pass on already-normalised inputs, `batch` rows.
    void forward(const double* x, double* y, int batch, Workspace& ws) const;
};

struct Samples {
    std::vector<double> x;  ///< rows of normalised inputs
    std::vector<double> y;  ///< rows of targets
    std::size_t count = 0;
};

/// Mean squared error over all outputs.
double mse(const NetParams& net, const Samples& data, int batch = 64);

/// Loss and gradient of the mean squared error on samples [first, first + batch) of `order`.
double loss_and_gradient(const NetParams& net, const Samples& data, const std::vector<std::size_t>& order,
                         std::size_t first, int batch, std::vector<double>& grad, Workspace& ws);

struct TrainConfig {
    int batch_size = 64;
    /// (epochs, learning rate) phases applied in order.
    std::vector<std::pair<int, double>> schedule{{100, 2e-3}, {100, 2e-4}};
    std::uint64_t seed = 1;
    /// Stop early once the epoch training loss falls below this value.
    double target_loss = 0.0;
    /// Optional per-epoch callback (epoch, train loss, dev loss or NaN).
    std::function<void(int, double, double)> on_epoch;

    int total_epochs() const;
    void validate() const;
};

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
public:
    explicit Adam(std::size_t n);
    void step(std::vector<double>& w, const std::vector<double>& grad, double lr);

private:
    std::vector<double> m_, v_;
    long t_ = 0;
};

/// Minibatch Adam on the MSE. Throws TrainingError when the loss turns non-finite.
void train(NetParams& net, const Samples& train_set, const Samples* dev_set, const TrainConfig& cfg);

struct GradCheck {
    double max_rel_error = 0.0;
    int checked = 0;
};

/// Compares backprop against central differences on `coords` random weights.
GradCheck gradient_check(const NetParams& net, const Samples& data, int coords, std::uint64_t seed,
                         double eps = 1e-6);

/// JSON header line followed by the little-endian weight payload.
void save_model(const std::filesystem::path& path, const NetParams& net);
NetParams load_model(const std::filesystem::path& path);
/// CSV epoch,train,dev.
std::string loss_csv(const TrainMeta& meta);

}  // namespace dld::nn
