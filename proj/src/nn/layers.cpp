#include "dld/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dld/errors.hpp"
#include "dld/simd/kernels.hpp"

namespace dld::nn {

using nlohmann::json;
using simd::GemmArgs;

namespace {

json shape_json(Shape s) { return json::array({s.c, s.h, s.w}); }
Shape shape_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

void he_uniform(double* w, std::size_t n, int fan_in, const std::function<double()>& u) {
    const double a = std::sqrt(6.0 / fan_in);
    for (std::size_t i = 0; i < n; ++i) w[i] = a * (2.0 * u() - 1.0);
}

}  // namespace

json Layer::describe() const {
    return {{"kind", layer_kind_name(kind())}, {"in", shape_json(in_)}, {"out", shape_json(out_)}};
}

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Dense: return "dense";
        case LayerKind::ScalarDense: return "scalar_dense";
        case LayerKind::Relu: return "relu";
        case LayerKind::Reshape: return "reshape";
        case LayerKind::Conv3x3: return "conv3x3";
        case LayerKind::Upsample2: return "upsample2";
    }
    return "?";
}

LayerPtr layer_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const Shape in = shape_from(j.at("in")), out = shape_from(j.at("out"));
    if (kind == "dense") return std::make_shared<Dense>(in.c, out.c);
    if (kind == "scalar_dense") return std::make_shared<ScalarDense>(in.c, j.at("width").get<int>());
    if (kind == "relu") return std::make_shared<Relu>(in);
    if (kind == "reshape") return std::make_shared<Reshape>(in, out);
    if (kind == "conv3x3") return std::make_shared<Conv3x3>(in, out.c);
    if (kind == "upsample2") return std::make_shared<Upsample2>(in);
    throw IoError("unknown layer kind '" + kind + "'");
}

// ---------------------------------------------------------------- Dense
// weights [out x in] row-major, then bias [out]

Dense::Dense(int in, int out) : Layer({in, 1, 1}, {out, 1, 1}) {
    if (in < 1 || out < 1) throw ShapeError("dense layer widths must be positive");
}

std::size_t Dense::param_count() const { return out_.size() * in_.size() + out_.size(); }

void Dense::init(double* w, const std::function<double()>& u) const {
    he_uniform(w, out_.size() * in_.size(), in_.c, u);
    std::fill_n(w + out_.size() * in_.size(), out_.size(), 0.0);
}

void Dense::forward(const double* w, const double* x, double* y, int batch, Workspace&) const {
    const std::size_t in = in_.size(), out = out_.size();
    const double* bias = w + in * out;
    for (int b = 0; b < batch; ++b) std::memcpy(y + b * out, bias, out * sizeof(double));
    simd::gemm(GemmArgs{static_cast<std::size_t>(batch), out, in, x, in, false, w, in, true, y, out, true});
}

void Dense::backward(const double* w, const double* x, const double*, const double* dy, double* dx, double* g,
                     int batch, Workspace&) const {
    const std::size_t in = in_.size(), out = out_.size();
    simd::gemm(GemmArgs{out, in, static_cast<std::size_t>(batch), dy, out, true, x, in, false, g, in, true});
    double* gb = g + in * out;
    for (int b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out; ++o) gb[o] += dy[b * out + o];
    if (dx) simd::gemm(GemmArgs{static_cast<std::size_t>(batch), in, out, dy, out, false, w, in, false, dx, in, false});
}

// ---------------------------------------------------------------- ScalarDense
// per feature k: weights [width], then bias [width]

ScalarDense::ScalarDense(int features, int width)
    : Layer({features, 1, 1}, {features * width, 1, 1}), width_(width) {
    if (features < 1 || width < 1) throw ShapeError("scalar dense sizes must be positive");
}

std::size_t ScalarDense::param_count() const { return 2 * out_.size(); }

void ScalarDense::init(double* w, const std::function<double()>& u) const {
    for (int k = 0; k < in_.c; ++k) {
        he_uniform(w + 2 * k * width_, width_, 1, u);
        std::fill_n(w + 2 * k * width_ + width_, width_, 0.0);
    }
}

void ScalarDense::forward(const double* w, const double* x, double* y, int batch, Workspace&) const {
    const int f = in_.c;
    for (int b = 0; b < batch; ++b)
        for (int k = 0; k < f; ++k) {
            const double xv = x[b * f + k];
            const double* wk = w + 2 * k * width_;
            double* yk = y + static_cast<std::size_t>(b) * out_.size() + k * width_;
            for (int j = 0; j < width_; ++j) yk[j] = wk[j] * xv + wk[width_ + j];
        }
}

void ScalarDense::backward(const double* w, const double* x, const double*, const double* dy, double* dx,
                           double* g, int batch, Workspace&) const {
    const int f = in_.c;
    for (int b = 0; b < batch; ++b)
        for (int k = 0; k < f; ++k) {
            const double xv = x[b * f + k];
            const double* wk = w + 2 * k * width_;
            double* gk = g + 2 * k * width_;
            const double* dyk = dy + static_cast<std::size_t>(b) * out_.size() + k * width_;
            double acc = 0.0;
            for (int j = 0; j < width_; ++j) {
                gk[j] += dyk[j] * xv;
                gk[width_ + j] += dyk[j];
                acc += dyk[j] * wk[j];
            }
            if (dx) dx[b * f + k] = acc;
        }
}

json ScalarDense::describe() const {
    json j = Layer::describe();
    j["width"] = width_;
    return j;
}

// ---------------------------------------------------------------- Relu / Reshape

void Relu::forward(const double*, const double* x, double* y, int batch, Workspace&) const {
    const std::size_t n = in_.size() * batch;
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void Relu::backward(const double*, const double*, const double* y, const double* dy, double* dx, double*, int batch,
                    Workspace&) const {
    if (!dx) return;
    const std::size_t n = in_.size() * batch;
    for (std::size_t i = 0; i < n; ++i) dx[i] = y[i] > 0.0 ? dy[i] : 0.0;
}

Reshape::Reshape(Shape in, Shape out) : Layer(in, out) {
    if (in.size() != out.size()) throw ShapeError("reshape must preserve the element count");
}

void Reshape::forward(const double*, const double* x, double* y, int batch, Workspace&) const {
    std::memcpy(y, x, in_.size() * batch * sizeof(double));
}

void Reshape::backward(const double*, const double*, const double*, const double* dy, double* dx, double*, int batch,
                       Workspace&) const {
    if (dx) std::memcpy(dx, dy, in_.size() * batch * sizeof(double));
}

// ---------------------------------------------------------------- Conv3x3
// weights [filters x (cin * 9)] row-major, then bias [filters]

namespace {

void im2col(const double* x, int c, int h, int w, double* cols) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                double* row = cols + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                const double* src = x + ci * hw;
                for (int yy = 0; yy < h; ++yy) {
                    const int sy = yy + ky - 1;
                    double* r = row + static_cast<std::size_t>(yy) * w;
                    if (sy < 0 || sy >= h) {
                        std::fill_n(r, w, 0.0);
                        continue;
                    }
                    const double* s = src + static_cast<std::size_t>(sy) * w;
                    const int x0 = std::max(0, 1 - kx), x1 = std::min(w, w + 1 - kx);
                    for (int xx = 0; xx < x0; ++xx) r[xx] = 0.0;
                    for (int xx = x0; xx < x1; ++xx) r[xx] = s[xx + kx - 1];
                    for (int xx = x1; xx < w; ++xx) r[xx] = 0.0;
                }
            }
}

void col2im_add(const double* cols, int c, int h, int w, double* x) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const double* row = cols + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                double* dst = x + ci * hw;
                for (int yy = 0; yy < h; ++yy) {
                    const int sy = yy + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    const double* r = row + static_cast<std::size_t>(yy) * w;
                    double* d = dst + static_cast<std::size_t>(sy) * w;
                    const int x0 = std::max(0, 1 - kx), x1 = std::min(w, w + 1 - kx);
                    for (int xx = x0; xx < x1; ++xx) d[xx + kx - 1] += r[xx];
                }
            }
}

}  // namespace

Conv3x3::Conv3x3(Shape in, int filters) : Layer(in, {filters, in.h, in.w}) {
    if (filters < 1 || in.c < 1 || in.h < 1 || in.w < 1) throw ShapeError("conv shape must be positive");
}

std::size_t Conv3x3::param_count() const {
    return static_cast<std::size_t>(out_.c) * in_.c * 9 + out_.c;
}

void Conv3x3::init(double* w, const std::function<double()>& u) const {
    const std::size_t nw = static_cast<std::size_t>(out_.c) * in_.c * 9;
    he_uniform(w, nw, in_.c * 9, u);
    std::fill_n(w + nw, out_.c, 0.0);
}

void Conv3x3::forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const {
    const std::size_t hw = static_cast<std::size_t>(in_.h) * in_.w, k = static_cast<std::size_t>(in_.c) * 9;
    const std::size_t nf = out_.c;
    ws.cols.resize(k * hw);
    const double* bias = w + nf * k;
    for (int b = 0; b < batch; ++b) {
        const double* xb = x + b * in_.size();
        double* yb = y + b * out_.size();
        im2col(xb, in_.c, in_.h, in_.w, ws.cols.data());
        for (std::size_t f = 0; f < nf; ++f) std::fill_n(yb + f * hw, hw, bias[f]);
        simd::gemm(GemmArgs{nf, hw, k, w, k, false, ws.cols.data(), hw, false, yb, hw, true});
    }
}

void Conv3x3::backward(const double* w, const double* x, const double*, const double* dy, double* dx, double* g,
                       int batch, Workspace& ws) const {
    const std::size_t hw = static_cast<std::size_t>(in_.h) * in_.w, k = static_cast<std::size_t>(in_.c) * 9;
    const std::size_t nf = out_.c;
    ws.cols.resize(k * hw);
    ws.dcols.resize(k * hw);
    double* gb = g + nf * k;
    for (int b = 0; b < batch; ++b) {
        const double* xb = x + b * in_.size();
        const double* dyb = dy + b * out_.size();
        im2col(xb, in_.c, in_.h, in_.w, ws.cols.data());
        simd::gemm(GemmArgs{nf, k, hw, dyb, hw, false, ws.cols.data(), hw, true, g, k, true});
        for (std::size_t f = 0; f < nf; ++f) {
            double s = 0.0;
            for (std::size_t p = 0; p < hw; ++p) s += dyb[f * hw + p];
            gb[f] += s;
        }
        if (dx) {
            simd::gemm(GemmArgs{k, hw, nf, w, k, true, dyb, hw, false, ws.dcols.data(), hw, false});
            double* dxb = dx + b * in_.size();
            std::fill_n(dxb, in_.size(), 0.0);
            col2im_add(ws.dcols.data(), in_.c, in_.h, in_.w, dxb);
        }
    }
}

// ---------------------------------------------------------------- Upsample2

Upsample2::Upsample2(Shape in) : Layer(in, {in.c, 2 * in.h, 2 * in.w}) {}

void Upsample2::forward(const double*, const double* x, double* y, int batch, Workspace&) const {
    const int h = in_.h, w = in_.w;
    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < in_.c; ++c) {
            const double* src = x + b * in_.size() + static_cast<std::size_t>(c) * h * w;
            double* dst = y + b * out_.size() + static_cast<std::size_t>(c) * 4 * h * w;
            for (int yy = 0; yy < 2 * h; ++yy) {
                const double* s = src + static_cast<std::size_t>(yy / 2) * w;
                double* d = dst + static_cast<std::size_t>(yy) * 2 * w;
                for (int xx = 0; xx < 2 * w; ++xx) d[xx] = s[xx / 2];
            }
        }
}

void Upsample2::backward(const double*, const double*, const double*, const double* dy, double* dx, double*,
                         int batch, Workspace&) const {
    if (!dx) return;
    const int h = in_.h, w = in_.w;
    for (int b = 0; b < batch; ++b)
        for (int c = 0; c < in_.c; ++c) {
            double* d = dx + b * in_.size() + static_cast<std::size_t>(c) * h * w;
            const double* s = dy + b * out_.size() + static_cast<std::size_t>(c) * 4 * h * w;
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    const double* a = s + static_cast<std::size_t>(2 * yy) * 2 * w + 2 * xx;
                    d[static_cast<std::size_t>(yy) * w + xx] = (a[0] + a[1]) + (a[2 * w] + a[2 * w + 1]);
                }
        }
}

}  // namespace dld::nn
