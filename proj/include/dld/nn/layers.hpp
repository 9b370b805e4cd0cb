#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

namespace dld::nn {

/// Per-sample feature shape, channel-major (c, h, w). Dense features use h = w = 1.
struct Shape {
    int c = 1, h = 1, w = 1;
    std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
    bool operator==(const Shape&) const = default;
};

/// Scratch buffers for im2col; one per thread.
struct Workspace {
    std::vector<double> cols;
    std::vector<double> dcols;
};

enum class LayerKind { Dense, ScalarDense, Relu, Reshape, Conv3x3, Upsample2 };

/**
 * A stateless layer. Parameters live in the owning network's flat weight
 * vector starting at offset(); gradients use the same layout.
 */
class Layer {
public:
    Layer(Shape in, Shape out) : in_(in), out_(out) {}
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual std::size_t param_count() const { return 0; }
    /// Writes initial weights (He-uniform) and zero biases into w.
    virtual void init(double* /*w*/, const std::function<double()>& /*uniform01*/) const {}

    virtual void forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const = 0;
    /// Accumulates parameter gradients into g and writes dL/dx into dx (skipped when null).
    virtual void backward(const double* w, const double* x, const double* y, const double* dy, double* dx,
                          double* g, int batch, Workspace& ws) const = 0;

    virtual nlohmann::json describe() const;

    Shape in_shape() const { return in_; }
    Shape out_shape() const { return out_; }
    std::size_t offset() const { return offset_; }
    void set_offset(std::size_t o) { offset_ = o; }

protected:
    Shape in_, out_;
    std::size_t offset_ = 0;
};

using LayerPtr = std::shared_ptr<const Layer>;

class Dense final : public Layer {
public:
    Dense(int in, int out);
    LayerKind kind() const override { return LayerKind::Dense; }
    std::size_t param_count() const override;
    void init(double* w, const std::function<double()>& uniform01) const override;
    void forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const override;
    void backward(const double* w, const double* x, const double* y, const double* dy, double* dx, double* g,
                  int batch, Workspace& ws) const override;
};

/// `features` independent 1 -> width dense maps whose outputs are concatenated.
class ScalarDense final : public Layer {
public:
    ScalarDense(int features, int width);
    LayerKind kind() const override { return LayerKind::ScalarDense; }
    std::size_t param_count() const override;
    void init(double* w, const std::function<double()>& uniform01) const override;
    void forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const override;
    void backward(const double* w, const double* x, const double* y, const double* dy, double* dx, double* g,
                  int batch, Workspace& ws) const override;
    nlohmann::json describe() const override;

private:
    int width_;
};

class Relu final : public Layer {
public:
    explicit Relu(Shape s) : Layer(s, s) {}
    LayerKind kind() const override { return LayerKind::Relu; }
    void forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const override;
    void backward(const double* w, const double* x, const double* y, const double* dy, double* dx, double* g,
                  int batch, Workspace& ws) const override;
};

class Reshape final : public Layer {
public:
    Reshape(Shape in, Shape out);
    LayerKind kind() const override { return LayerKind::Reshape; }
    void forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const override;
    void backward(const double* w, const double* x, const double* y, const double* dy, double* dx, double* g,
                  int batch, Workspace& ws) const override;
};

/// 3x3 convolution, stride 1, zero "same" padding.
class Conv3x3 final : public Layer {
public:
    Conv3x3(Shape in, int filters);
    LayerKind kind() const override { return LayerKind::Conv3x3; }
    std::size_t param_count() const override;
    void init(double* w, const std::function<double()>& uniform01) const override;
    void forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const override;
    void backward(const double* w, const double* x, const double* y, const double* dy, double* dx, double* g,
                  int batch, Workspace& ws) const override;
};

/// 2x2 nearest-neighbour upsampling.
class Upsample2 final : public Layer {
public:
    explicit Upsample2(Shape in);
    LayerKind kind() const override { return LayerKind::Upsample2; }
    void forward(const double* w, const double* x, double* y, int batch, Workspace& ws) const override;
    void backward(const double* w, const double* x, const double* y, const double* dy, double* dx, double* g,
                  int batch, Workspace& ws) const override;
};

const char* layer_kind_name(LayerKind k);
/// Rebuilds a layer from describe() output.
LayerPtr layer_from_json(const nlohmann::json& j);

}  // namespace dld::nn
