#include "dld/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dld/errors.hpp"

namespace dld {

using nn::LayerPtr;
using nn::NetParams;
using nn::Samples;
using nn::Shape;

namespace {

void raw_features(const DldParams& p, double* out) {
    out[0] = p.f;
    out[1] = static_cast<double>(p.n);
    out[2] = p.re;
}

void push_features(const NetParams& net, const DldParams& p, std::vector<double>& x) {
    double raw[3], scaled[3];
    raw_features(p, raw);
    net.input_normalization.apply(raw, scaled);
    x.insert(x.end(), scaled, scaled + 3);
}

template <class L, class... Args>
LayerPtr make(Args&&... args) {
    return std::make_shared<const L>(std::forward<Args>(args)...);
}

}  // namespace

nn::Normalization hull_normalization() {
    using namespace hull;
    return {{f_min, static_cast<double>(n_min), re_min}, {f_max, static_cast<double>(n_max), re_max}};
}

void check_in_hull(const NetParams& net, const DldParams& params) {
    double raw[3];
    raw_features(params, raw);
    const auto& nz = net.input_normalization;
    static const char* names[] = {"f", "N", "Re"};
    for (int k = 0; k < 3; ++k) {
        if (!(raw[k] >= nz.lo[k] && raw[k] <= nz.hi[k])) {
            throw ExtrapolationError(std::string(names[k]) + " = " + fmt17(raw[k]) + " is outside the training hull [" +
                                     fmt17(nz.lo[k]) + ", " + fmt17(nz.hi[k]) + "]");
        }
    }
}

// ---------------------------------------------------------------------------

NetParams fcnn_build(int hidden_layers, int width, std::uint64_t seed) {
    if (hidden_layers < 1 || width < 1) throw ArgumentError("fcnn needs at least one hidden layer of width >= 1");
    NetParams net;
    net.kind = "fcnn";
    net.input = {3, 1, 1};
    nn::Branch b;
    int in = 3;
    for (int l = 0; l < hidden_layers; ++l) {
        b.push_back(make<nn::Dense>(in, width));
        b.push_back(make<nn::Relu>(Shape{width, 1, 1}));
        in = width;
    }
    b.push_back(make<nn::Dense>(in, 1));
    net.branches.push_back(std::move(b));
    net.finalize_layout();
    net.initialize(seed);
    net.input_normalization = hull_normalization();
    net.extra = {{"hidden_layers", hidden_layers}, {"width", width}};
    return net;
}

void fcnn_samples(const DatasetManifest& data, Samples& train, Samples& dev) {
    const NetParams probe = [] {
        NetParams n;
        n.input_normalization = hull_normalization();
        return n;
    }();
    train = {};
    dev = {};
    for (const DataRecord& r : data.records) {
        if (!r.d_c || r.split == Split::Test) continue;
        Samples& s = r.split == Split::Dev ? dev : train;
        push_features(probe, r.params, s.x);
        s.y.push_back(*r.d_c);
        ++s.count;
    }
}

nn::TrainConfig fcnn_default_config() {
    nn::TrainConfig c;
    c.batch_size = 64;
    c.schedule = {{1000, 1e-4}};
    return c;
}

NetParams fcnn_train(const DatasetManifest& data, const nn::TrainConfig& cfg, int hidden_layers, int width) {
    Samples train, dev;
    fcnn_samples(data, train, dev);
    if (train.count == 0) throw ArgumentError("no training records with a critical diameter");
    NetParams net = fcnn_build(hidden_layers, width, cfg.seed);
    nn::train(net, train, dev.count ? &dev : nullptr, cfg);
    return net;
}

std::vector<double> fcnn_predict_batch(const NetParams& net, const std::vector<DldParams>& params) {
    std::vector<double> x;
    x.reserve(3 * params.size());
    for (const DldParams& p : params) {
        check_in_hull(net, p);
        push_features(net, p, x);
    }
    std::vector<double> y(params.size());
    if (params.empty()) return y;
    nn::Workspace ws;
    net.forward(x.data(), y.data(), static_cast<int>(params.size()), ws);
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = params[k].gap_fraction();
        const double eps = 1e-9 * g;
        if (!std::isfinite(y[k])) y[k] = 0.0;
        y[k] = std::clamp(y[k], eps, g - eps);
    }
    return y;
}

double fcnn_predict(const NetParams& net, const DldParams& params) { return fcnn_predict_batch(net, {params})[0]; }

// ---------------------------------------------------------------------------

NetParams cnn_build(int res, int base_filters, std::uint64_t seed) {
    if (res != 32 && res != 64 && res != 128) throw ShapeError("field network resolution must be 32, 64 or 128");
    if (base_filters < 16) throw ArgumentError("base filter count must be at least 16");
    const int s = res / 8;
    NetParams net;
    net.kind = "cnn";
    net.input = {3, 1, 1};
    for (int branch = 0; branch < 2; ++branch) {
        nn::Branch b;
        b.push_back(make<nn::ScalarDense>(3, 16));
        b.push_back(make<nn::Relu>(Shape{48, 1, 1}));
        b.push_back(make<nn::Dense>(48, 256));
        b.push_back(make<nn::Relu>(Shape{256, 1, 1}));
        b.push_back(make<nn::Dense>(256, 256));
        b.push_back(make<nn::Relu>(Shape{256, 1, 1}));
        b.push_back(make<nn::Dense>(256, s * s * 64));
        b.push_back(make<nn::Relu>(Shape{s * s * 64, 1, 1}));
        b.push_back(make<nn::Reshape>(Shape{s * s * 64, 1, 1}, Shape{64, s, s}));
        Shape cur{64, s, s};
        auto conv = [&](int filters, bool relu) {
            b.push_back(make<nn::Conv3x3>(cur, filters));
            cur = {filters, cur.h, cur.w};
            if (relu) b.push_back(make<nn::Relu>(cur));
        };
        auto up = [&] {
            b.push_back(make<nn::Upsample2>(cur));
            cur = {cur.c, cur.h * 2, cur.w * 2};
        };
        conv(64, true);
        up();
        conv(base_filters, true);
        up();
        conv(base_filters, true);
        up();
        conv(64, true);
        conv(1, false);
        net.branches.push_back(std::move(b));
    }
    net.finalize_layout();
    net.initialize(seed);
    net.input_normalization = hull_normalization();
    net.extra = {{"res", res}, {"base_filters", base_filters}, {"train_max_speed", 0.0}};
    return net;
}

void cnn_samples(const DatasetManifest& data, const std::filesystem::path& dir, int res, Samples& train,
                 Samples& dev) {
    NetParams probe;
    probe.input_normalization = hull_normalization();
    train = {};
    dev = {};
    for (const DataRecord& r : data.records) {
        if (r.split == Split::Test || r.field.empty()) continue;
        Samples& s = r.split == Split::Dev ? dev : train;
        const FlowField stored = load_record_field(dir, r);
        const FlowField f = stored.res() == res ? stored : resample(stored, res);
        push_features(probe, r.params, s.x);
        s.y.insert(s.y.end(), f.u().begin(), f.u().end());
        s.y.insert(s.y.end(), f.v().begin(), f.v().end());
        ++s.count;
    }
}

nn::TrainConfig cnn_default_config() {
    nn::TrainConfig c;
    c.batch_size = 64;
    c.schedule = {{100, 2e-3}, {100, 2e-4}};
    return c;
}

NetParams cnn_train(NetParams net, const Samples& train, const Samples* dev, const nn::TrainConfig& cfg) {
    if (net.kind != "cnn") throw ArgumentError("cnn_train expects a field network");
    const std::size_t plane = net.output_size() / 2;
    if (train.count == 0 || train.y.size() != train.count * 2 * plane) {
        throw ShapeError("training targets do not match the network resolution");
    }
    double vmax = 0.0;
    for (std::size_t s = 0; s < train.count; ++s) {
        const double* u = train.y.data() + s * 2 * plane;
        for (std::size_t k = 0; k < plane; ++k) vmax = std::max(vmax, std::hypot(u[k], u[plane + k]));
    }
    net.extra["train_max_speed"] = vmax;
    nn::train(net, train, dev && dev->count ? dev : nullptr, cfg);
    return net;
}

NetParams cnn_train(const DatasetManifest& data, const std::filesystem::path& dir, const nn::TrainConfig& cfg,
                    int res, int base_filters) {
    Samples train, dev;
    cnn_samples(data, dir, res, train, dev);
    if (train.count == 0) throw ArgumentError("no training fields");
    return cnn_train(cnn_build(res, base_filters, cfg.seed), train, &dev, cfg);
}

FlowField cnn_predict_raw(const NetParams& net, const DldParams& params) {
    if (net.kind != "cnn") throw ArgumentError("cnn_predict expects a field network");
    check_in_hull(net, params);
    const int res = net.extra.at("res").get<int>();
    const std::size_t plane = static_cast<std::size_t>(res) * res;
    std::vector<double> x;
    push_features(net, params, x);
    std::vector<double> y(2 * plane);
    nn::Workspace ws;
    net.forward(x.data(), y.data(), 1, ws);
    std::vector<double> u(y.begin(), y.begin() + plane), v(y.begin() + plane, y.end());
    return FlowField(params, res, std::move(u), std::move(v), params.re);
}

FlowField cnn_predict_field(const NetParams& net, const DldParams& params) {
    FlowField f = cnn_predict_raw(net, params);
    const int res = f.res();
    const CellGeometry geom = unit_cell_unchecked(params.f, params.n);
    auto u = f.u_mut();
    auto v = f.v_mut();
    for (int j = 0; j < res; ++j) {
        for (int i = 0; i < res; ++i) {
            const Vec2 q{static_cast<double>(i) / res, static_cast<double>(j) / res};
            if (geom.signed_distance(map_from_unit(q, params.n, 1.0)) < 0.0) {
                u[static_cast<std::size_t>(j) * res + i] = 0.0;
                v[static_cast<std::size_t>(j) * res + i] = 0.0;
            }
        }
    }
    return f;
}

double cnn_training_max_speed(const NetParams& net) { return net.extra.value("train_max_speed", 0.0); }

}  // namespace dld
