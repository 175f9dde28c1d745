#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nobox/core/rng.hpp"
#include "nobox/core/tensor.hpp"

namespace nobox::nn {

enum class Mode { kEval, kTrain };

struct Context {
  Mode mode = Mode::kEval;
  Rng* rng = nullptr;  // required only for stochastic layers in kTrain
};

/// Saved state of one layer's forward pass, consumed by its backward pass.
struct Cache {
  Tensor input;
  Tensor saved;
  std::vector<double> stats;
  std::vector<std::size_t> indices;
  std::vector<Cache> children;
};

using Tape = std::vector<Cache>;

/// A stateless differentiable operator. Parameters live in a caller-owned flat
/// vector; the layer only knows how many it needs.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string name() const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual std::size_t param_count() const { return 0; }
  virtual void init_params(std::span<double> /*params*/, Rng& /*rng*/) const {}

  virtual Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                         const Context& ctx) const = 0;
  /// Accumulates into grad_params; returns dL/d(input) (empty when !need_input_grad).
  virtual Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                          std::span<double> grad_params, bool need_input_grad) const = 0;
};

/// Ordered layer stack with contiguous parameter slices.
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  Sequential& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  Sequential& emplace(Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...));
  }

  std::size_t size() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  std::size_t param_count() const { return total_params_; }
  Shape output_shape(const Shape& in) const;
  Shape output_shape(const Shape& in, std::size_t end) const;

  void init_params(std::span<double> params, Rng& rng) const;

  /// Runs layers [begin, end). The tape is resized to size() and only the
  /// touched entries are written.
  Tensor forward(std::span<const double> params, const Tensor& in, Tape& tape, const Context& ctx,
                 std::size_t begin = 0, std::size_t end = static_cast<std::size_t>(-1)) const;
  Tensor backward(std::span<const double> params, const Tape& tape, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad, std::size_t begin = 0,
                  std::size_t end = static_cast<std::size_t>(-1)) const;

  std::string describe() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<std::size_t> offsets_;
  std::size_t total_params_ = 0;
};

class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding);

  std::string name() const override;
  Shape output_shape(const Shape& in) const override;
  std::size_t param_count() const override;
  void init_params(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;

 private:
  int in_channels_, out_channels_, kernel_, stride_, padding_;
};

/// Per-sample, per-channel normalization over the spatial plane with an affine map.
class InstanceNorm2d final : public Layer {
 public:
  explicit InstanceNorm2d(int channels, double eps = 1e-5);

  std::string name() const override;
  Shape output_shape(const Shape& in) const override { return in; }
  std::size_t param_count() const override { return 2 * static_cast<std::size_t>(channels_); }
  void init_params(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;

 private:
  int channels_;
  double eps_;
};

class ReLU final : public Layer {
 public:
  std::string name() const override { return "ReLU"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;
};

/// Logistic map onto (0, 1).
class Sigmoid final : public Layer {
 public:
  std::string name() const override { return "Sigmoid"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;
};

/// Nearest-neighbour 2x spatial upsampling.
class Upsample2x final : public Layer {
 public:
  std::string name() const override { return "Upsample2x"; }
  Shape output_shape(const Shape& in) const override { return {in.n, in.c, 2 * in.h, 2 * in.w}; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;
};

class MaxPool2x2 final : public Layer {
 public:
  std::string name() const override { return "MaxPool2x2"; }
  Shape output_shape(const Shape& in) const override { return {in.n, in.c, in.h / 2, in.w / 2}; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;
};

class AvgPool2x2 final : public Layer {
 public:
  std::string name() const override { return "AvgPool2x2"; }
  Shape output_shape(const Shape& in) const override { return {in.n, in.c, in.h / 2, in.w / 2}; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;
};

/// [N, C, H, W] -> [N, C, 1, 1]
class GlobalAvgPool final : public Layer {
 public:
  std::string name() const override { return "GlobalAvgPool"; }
  Shape output_shape(const Shape& in) const override { return {in.n, in.c, 1, 1}; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;
};

/// [N, C, H, W] -> [N, C*H*W, 1, 1]
/// Fixed elementwise (x - shift) * scale; no parameters.
class Affine final : public Layer {
 public:
  Affine(double shift, double scale) : shift_(shift), scale_(scale) {}
  std::string name() const override { return "Affine"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;

 private:
  double shift_;
  double scale_;
};

class Flatten final : public Layer {
 public:
  std::string name() const override { return "Flatten"; }
  Shape output_shape(const Shape& in) const override {
    return {in.n, static_cast<int>(in.sample_size()), 1, 1};
  }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;
};

class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features);

  std::string name() const override;
  Shape output_shape(const Shape& in) const override { return {in.n, out_features_, 1, 1}; }
  std::size_t param_count() const override;
  void init_params(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;

 private:
  int in_features_, out_features_;
};

/// Inverted dropout; identity in kEval.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate);

  std::string name() const override;
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;

 private:
  double rate_;
};

/// y = x + body(x); body must preserve shape.
class Residual final : public Layer {
 public:
  explicit Residual(Sequential body);

  std::string name() const override;
  Shape output_shape(const Shape& in) const override { return in; }
  std::size_t param_count() const override { return body_.param_count(); }
  void init_params(std::span<double> params, Rng& rng) const override;
  Tensor forward(std::span<const double> params, const Tensor& in, Cache& cache,
                 const Context& ctx) const override;
  Tensor backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                  std::span<double> grad_params, bool need_input_grad) const override;

 private:
  Sequential body_;
};

/// CycleGAN-style block: conv3x3-IN-ReLU-conv3x3-IN with identity skip.
std::unique_ptr<Layer> make_residual_block(int channels);

}  // namespace nobox::nn
