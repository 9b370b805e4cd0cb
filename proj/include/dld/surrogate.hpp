#pragma once

#include <cstdint>
#include <filesystem>

#include "dld/dataset.hpp"
#include "dld/flow.hpp"
#include "dld/nn/network.hpp"

namespace dld {

/// Maps the parameter hull (f, N, Re) onto [0, 1]^3.
nn::Normalization hull_normalization();

/// Raises ExtrapolationError when params lie outside the normalisation box.
void check_in_hull(const nn::NetParams& net, const DldParams& params);

// ---- direct critical-diameter predictor ----------------------------------

/// 3 -> width x hidden_layers -> 1 with ReLU hidden activations.
nn::NetParams fcnn_build(int hidden_layers = 8, int width = 128, std::uint64_t seed = 1);

/// Training pairs from records with a d_c label; Train/None records go to
/// `train`, Dev records to `dev`, Test records are skipped.
void fcnn_samples(const DatasetManifest& data, nn::Samples& train, nn::Samples& dev);

/// Paper schedule for the direct network: 1000 epochs at 1e-4.
nn::TrainConfig fcnn_default_config();

nn::NetParams fcnn_train(const DatasetManifest& data, const nn::TrainConfig& cfg, int hidden_layers = 8,
                         int width = 128);

/// Nondimensional d_c (unit-cell lengths), clamped to the open interval (0, 1 - f).
double fcnn_predict(const nn::NetParams& net, const DldParams& params);
/// Same as fcnn_predict for many points in one batched pass.
std::vector<double> fcnn_predict_batch(const nn::NetParams& net, const std::vector<DldParams>& params);

// ---- field generator ------------------------------------------------------

/// Two decoder branches (u, v) of the Table-2 layout ending in res x res planes.
nn::NetParams cnn_build(int res = 32, int base_filters = 64, std::uint64_t seed = 1);

/// Targets are the stored fields resampled to the network resolution; rows hold u then v.
void cnn_samples(const DatasetManifest& data, const std::filesystem::path& dir, int res, nn::Samples& train,
                 nn::Samples& dev);

/// Paper schedule for the field network: 100 epochs at 2e-3, then 100 at 2e-4.
nn::TrainConfig cnn_default_config();

/// Trains on pre-assembled samples and records the largest training speed.
nn::NetParams cnn_train(nn::NetParams net, const nn::Samples& train, const nn::Samples* dev,
                        const nn::TrainConfig& cfg);
nn::NetParams cnn_train(const DatasetManifest& data, const std::filesystem::path& dir, const nn::TrainConfig& cfg,
                        int res = 32, int base_filters = 64);

/// Network output without the pillar mask.
FlowField cnn_predict_raw(const nn::NetParams& net, const DldParams& params);
/// Network output with in-pillar nodes zeroed; usable by the tracer.
FlowField cnn_predict_field(const nn::NetParams& net, const DldParams& params);

/// Largest training-set speed recorded by cnn_train (0 when unknown).
double cnn_training_max_speed(const nn::NetParams& net);

}  // namespace dld
