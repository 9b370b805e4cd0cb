#include "dld/nn/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "dld/errors.hpp"
#include "dld/io.hpp"
#include "dld/rng.hpp"

namespace dld::nn {

using nlohmann::json;

void Normalization::apply(const double* raw, double* out) const {
    for (std::size_t k = 0; k < lo.size(); ++k) out[k] = (raw[k] - lo[k]) / (hi[k] - lo[k]);
}

void Normalization::invert(const double* scaled, double* out) const {
    for (std::size_t k = 0; k < lo.size(); ++k) out[k] = lo[k] + scaled[k] * (hi[k] - lo[k]);
}

std::size_t NetParams::output_size() const {
    std::size_t n = 0;
    for (const Branch& b : branches) n += b.empty() ? input.size() : b.back()->out_shape().size();
    return n;
}

std::size_t NetParams::branch_param_count(std::size_t b) const {
    std::size_t n = 0;
    for (const LayerPtr& l : branches.at(b)) n += l->param_count();
    return n;
}

void NetParams::finalize_layout() {
    std::size_t off = 0;
    for (Branch& b : branches) {
        Shape s = input;
        for (LayerPtr& l : b) {
            if (l->in_shape().size() != s.size()) throw ShapeError("adjacent layer shapes are incompatible");
            // Layers are shared immutable objects once built; offsets are set before sharing.
            const_cast<Layer&>(*l).set_offset(off);
            off += l->param_count();
            s = l->out_shape();
        }
    }
    weights.assign(off, 0.0);
}

void NetParams::initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::function<double()> u = [&rng] { return uniform01(rng()); };
    for (const Branch& b : branches)
        for (const LayerPtr& l : b) l->init(weights.data() + l->offset(), u);
}

namespace {

std::size_t max_width(const Branch& b, Shape input) {
    std::size_t m = input.size();
    for (const LayerPtr& l : b) m = std::max(m, l->out_shape().size());
    return m;
}

}  // namespace

void NetParams::forward(const double* x, double* y, int batch, Workspace& ws) const {
    const std::size_t out_total = output_size();
    std::size_t col = 0;
    std::vector<double> a, b;
    for (const Branch& br : branches) {
        const std::size_t width = max_width(br, input);
        a.resize(width * batch);
        b.resize(width * batch);
        std::memcpy(a.data(), x, input.size() * batch * sizeof(double));
        for (const LayerPtr& l : br) {
            l->forward(weights.data() + l->offset(), a.data(), b.data(), batch, ws);
            a.swap(b);
        }
        const std::size_t n = br.empty() ? input.size() : br.back()->out_shape().size();
        for (int s = 0; s < batch; ++s) std::memcpy(y + s * out_total + col, a.data() + s * n, n * sizeof(double));
        col += n;
    }
}

double mse(const NetParams& net, const Samples& data, int batch) {
    if (data.count == 0) return 0.0;
    const std::size_t in = net.input.size(), out = net.output_size();
    Workspace ws;
    std::vector<double> y;
    double sum = 0.0;
    for (std::size_t first = 0; first < data.count; first += batch) {
        const int bs = static_cast<int>(std::min<std::size_t>(batch, data.count - first));
        y.resize(out * bs);
        net.forward(data.x.data() + first * in, y.data(), bs, ws);
        const double* t = data.y.data() + first * out;
        for (std::size_t k = 0; k < out * bs; ++k) sum += (y[k] - t[k]) * (y[k] - t[k]);
    }
    return sum / static_cast<double>(data.count * out);
}

double loss_and_gradient(const NetParams& net, const Samples& data, const std::vector<std::size_t>& order,
                         std::size_t first, int batch, std::vector<double>& grad, Workspace& ws) {
    const std::size_t in = net.input.size(), out_total = net.output_size();
    grad.assign(net.weights.size(), 0.0);
    std::vector<double> x(in * batch), t(out_total * batch);
    for (int s = 0; s < batch; ++s) {
        const std::size_t r = order[first + s];
        std::memcpy(x.data() + s * in, data.x.data() + r * in, in * sizeof(double));
        std::memcpy(t.data() + s * out_total, data.y.data() + r * out_total, out_total * sizeof(double));
    }
    const double scale = 2.0 / static_cast<double>(batch * out_total);
    double loss = 0.0;
    std::size_t col = 0;
    std::vector<std::vector<double>> acts;
    std::vector<double> d, dn;
    for (const Branch& br : net.branches) {
        acts.resize(br.size() + 1);
        acts[0] = x;
        for (std::size_t l = 0; l < br.size(); ++l) {
            acts[l + 1].resize(br[l]->out_shape().size() * batch);
            br[l]->forward(net.weights.data() + br[l]->offset(), acts[l].data(), acts[l + 1].data(), batch, ws);
        }
        const std::size_t n = br.empty() ? in : br.back()->out_shape().size();
        const std::vector<double>& y = acts[br.size()];
        d.resize(n * batch);
        for (int s = 0; s < batch; ++s)
            for (std::size_t k = 0; k < n; ++k) {
                const double e = y[s * n + k] - t[s * out_total + col + k];
                loss += e * e;
                d[s * n + k] = scale * e;
            }
        for (std::size_t l = br.size(); l-- > 0;) {
            const Layer& L = *br[l];
            double* dx = nullptr;
            if (l > 0) {
                dn.resize(L.in_shape().size() * batch);
                dx = dn.data();
            }
            L.backward(net.weights.data() + L.offset(), acts[l].data(), acts[l + 1].data(), d.data(), dx,
                       grad.data() + L.offset(), batch, ws);
            if (dx) d.swap(dn);
        }
        col += n;
    }
    return loss / static_cast<double>(batch * out_total);
}

int TrainConfig::total_epochs() const {
    int n = 0;
    for (const auto& [e, lr] : schedule) n += e;
    return n;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ArgumentError("batch size must be positive");
    if (schedule.empty()) throw ArgumentError("learning-rate schedule is empty");
    for (const auto& [e, lr] : schedule) {
        if (e < 0) throw ArgumentError("schedule epochs must be non-negative");
        if (!(lr > 0.0)) throw ArgumentError("learning rates must be positive");
    }
}

Adam::Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& w, const std::vector<double>& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < w.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        w[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    }
}

void train(NetParams& net, const Samples& train_set, const Samples* dev_set, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.count == 0) throw ArgumentError("training set is empty");
    Adam opt(net.weights.size());
    Workspace ws;
    std::vector<double> grad;
    net.meta.seed = cfg.seed;
    int epoch = 0;
    for (const auto& [phase_epochs, lr] : cfg.schedule) {
        for (int e = 0; e < phase_epochs; ++e, ++epoch) {
            const std::vector<std::size_t> order = seeded_permutation(train_set.count, cfg.seed + 7919u * epoch);
            double sum = 0.0;
            for (std::size_t first = 0; first < train_set.count; first += cfg.batch_size) {
                const int bs = static_cast<int>(std::min<std::size_t>(cfg.batch_size, train_set.count - first));
                const double l = loss_and_gradient(net, train_set, order, first, bs, grad, ws);
                if (!std::isfinite(l)) {
                    throw TrainingError("training loss became non-finite at epoch " + std::to_string(epoch), epoch);
                }
                sum += l * bs;
                opt.step(net.weights, grad, lr);
            }
            const double train_loss = sum / static_cast<double>(train_set.count);
            const double dev_loss = dev_set && dev_set->count ? mse(net, *dev_set) : std::nan("");
            net.meta.train_loss.push_back(train_loss);
            if (dev_set && dev_set->count) net.meta.dev_loss.push_back(dev_loss);
            net.meta.epochs = epoch + 1;
            if (cfg.on_epoch) cfg.on_epoch(epoch, train_loss, dev_loss);
            if (cfg.target_loss > 0.0 && train_loss < cfg.target_loss) return;
        }
    }
}

GradCheck gradient_check(const NetParams& net, const Samples& data, int coords, std::uint64_t seed, double eps) {
    std::vector<std::size_t> order(data.count);
    for (std::size_t i = 0; i < data.count; ++i) order[i] = i;
    Workspace ws;
    std::vector<double> grad, scratch;
    loss_and_gradient(net, data, order, 0, static_cast<int>(data.count), grad, ws);
    NetParams probe = net;
    std::mt19937_64 rng(seed);
    GradCheck out;
    for (int c = 0; c < coords; ++c) {
        const std::size_t i = bounded(rng, net.weights.size());
        const double w0 = probe.weights[i];
        probe.weights[i] = w0 + eps;
        const double lp = loss_and_gradient(probe, data, order, 0, static_cast<int>(data.count), scratch, ws);
        probe.weights[i] = w0 - eps;
        const double lm = loss_and_gradient(probe, data, order, 0, static_cast<int>(data.count), scratch, ws);
        probe.weights[i] = w0;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
        // Coordinates with a vanishing gradient only need absolute agreement.
        const double err = scale > 1e-7 ? std::abs(numeric - grad[i]) / scale : std::abs(numeric - grad[i]);
        out.max_rel_error = std::max(out.max_rel_error, err);
        ++out.checked;
    }
    return out;
}

namespace {

json shape_json(Shape s) { return json::array({s.c, s.h, s.w}); }

}  // namespace

void save_model(const std::filesystem::path& path, const NetParams& net) {
    json branches = json::array();
    for (const Branch& b : net.branches) {
        json layers = json::array();
        for (const LayerPtr& l : b) layers.push_back(l->describe());
        branches.push_back(layers);
    }
    json header = {{"format", "dld-forge-model"},
                   {"version", 1},
                   {"kind", net.kind},
                   {"input", shape_json(net.input)},
                   {"branches", branches},
                   {"param_count", net.weights.size()},
                   {"normalization", {{"lo", net.input_normalization.lo}, {"hi", net.input_normalization.hi}}},
                   {"meta",
                    {{"epochs", net.meta.epochs},
                     {"seed", net.meta.seed},
                     {"train_loss", net.meta.train_loss},
                     {"dev_loss", net.meta.dev_loss}}},
                   {"extra", net.extra}};
    std::string text = header.dump() + "\n";
    std::vector<unsigned char> bytes(net.weights.size() * 8);
    if (!bytes.empty()) std::memcpy(bytes.data(), net.weights.data(), bytes.size());
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t k = 0; k < bytes.size(); k += 8) std::reverse(bytes.begin() + k, bytes.begin() + k + 8);
    }
    text.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    write_text(path, text);
}

NetParams load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + path.string());
    std::string line;
    std::getline(in, line);
    NetParams net;
    try {
        const json h = json::parse(line);
        if (h.at("format") != "dld-forge-model") throw IoError(path.string() + " is not a model file");
        net.kind = h.at("kind").get<std::string>();
        const json& s = h.at("input");
        net.input = {s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>()};
        for (const json& b : h.at("branches")) {
            Branch br;
            for (const json& l : b) br.push_back(layer_from_json(l));
            net.branches.push_back(std::move(br));
        }
        net.finalize_layout();
        if (net.weights.size() != h.at("param_count").get<std::size_t>()) {
            throw IoError(path.string() + ": parameter count does not match the layer stack");
        }
        net.input_normalization.lo = h.at("normalization").at("lo").get<std::vector<double>>();
        net.input_normalization.hi = h.at("normalization").at("hi").get<std::vector<double>>();
        const json& m = h.at("meta");
        net.meta.epochs = m.at("epochs").get<int>();
        net.meta.seed = m.at("seed").get<std::uint64_t>();
        net.meta.train_loss = m.at("train_loss").get<std::vector<double>>();
        net.meta.dev_loss = m.at("dev_loss").get<std::vector<double>>();
        net.extra = h.value("extra", json::object());
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": malformed model header: " + e.what());
    }
    std::vector<unsigned char> bytes(net.weights.size() * 8);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) throw IoError(path.string() + ": truncated weights");
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t k = 0; k < bytes.size(); k += 8) std::reverse(bytes.begin() + k, bytes.begin() + k + 8);
    }
    if (!bytes.empty()) std::memcpy(net.weights.data(), bytes.data(), bytes.size());
    for (double w : net.weights)
        if (!std::isfinite(w)) throw IoError(path.string() + ": non-finite weight");
    return net;
}

std::string loss_csv(const TrainMeta& meta) {
    std::ostringstream s;
    s << "epoch,train,dev\n";
    for (std::size_t e = 0; e < meta.train_loss.size(); ++e) {
        s << e + 1 << ',' << fmt17(meta.train_loss[e]) << ',';
        if (e < meta.dev_loss.size()) s << fmt17(meta.dev_loss[e]);
        s << '\n';
    }
    return s.str();
}

}  // namespace dld::nn
