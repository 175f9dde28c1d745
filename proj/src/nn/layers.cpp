#include "nobox/nn/layers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nobox::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_shape(bool ok, const std::string& layer, const Shape& got) {
  if (!ok) throw std::invalid_argument(layer + ": unexpected input shape " + got.str());
}

}  // namespace

// ---------------------------------------------------------------- Sequential

Sequential& Sequential::add(std::unique_ptr<Layer> layer) {
  offsets_.push_back(total_params_);
  total_params_ += layer->param_count();
  layers_.push_back(std::move(layer));
  return *this;
}

Shape Sequential::output_shape(const Shape& in) const { return output_shape(in, layers_.size()); }

Shape Sequential::output_shape(const Shape& in, std::size_t end) const {
  Shape s = in;
  for (std::size_t i = 0; i < std::min(end, layers_.size()); ++i) s = layers_[i]->output_shape(s);
  return s;
}

void Sequential::init_params(std::span<double> params, Rng& rng) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->init_params(params.subspan(offsets_[i], layers_[i]->param_count()), rng);
  }
}

Tensor Sequential::forward(std::span<const double> params, const Tensor& in, Tape& tape,
                           const Context& ctx, std::size_t begin, std::size_t end) const {
  end = std::min(end, layers_.size());
  if (tape.size() != layers_.size()) tape.resize(layers_.size());
  Tensor x = in;
  for (std::size_t i = begin; i < end; ++i) {
    x = layers_[i]->forward(params.subspan(offsets_[i], layers_[i]->param_count()), x, tape[i], ctx);
  }
  return x;
}

Tensor Sequential::backward(std::span<const double> params, const Tape& tape, const Tensor& grad_out,
                            std::span<double> grad_params, bool need_input_grad, std::size_t begin,
                            std::size_t end) const {
  end = std::min(end, layers_.size());
  Tensor g = grad_out;
  for (std::size_t i = end; i-- > begin;) {
    const bool need = need_input_grad || i > begin;
    std::span<double> gp =
        grad_params.empty() ? grad_params : grad_params.subspan(offsets_[i], layers_[i]->param_count());
    g = layers_[i]->backward(params.subspan(offsets_[i], layers_[i]->param_count()), tape[i], g, gp, need);
  }
  return g;
}

std::string Sequential::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i) os << " -> ";
    os << layers_[i]->name();
  }
  return os.str();
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), stride_(stride),
      padding_(padding) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || stride <= 0 || padding < 0) {
    throw std::invalid_argument("Conv2d: invalid configuration");
  }
}

std::string Conv2d::name() const {
  std::ostringstream os;
  os << "Conv2d(" << in_channels_ << "->" << out_channels_ << ",k" << kernel_ << ",s" << stride_
     << ",p" << padding_ << ")";
  return os.str();
}

Shape Conv2d::output_shape(const Shape& in) const {
  return {in.n, out_channels_, (in.h + 2 * padding_ - kernel_) / stride_ + 1,
          (in.w + 2 * padding_ - kernel_) / stride_ + 1};
}

std::size_t Conv2d::param_count() const {
  return static_cast<std::size_t>(out_channels_) * in_channels_ * kernel_ * kernel_ + out_channels_;
}

void Conv2d::init_params(std::span<double> params, Rng& rng) const {
  const double fan_in = static_cast<double>(in_channels_) * kernel_ * kernel_;
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
  const std::size_t weights = param_count() - out_channels_;
  for (std::size_t i = 0; i < weights; ++i) params[i] = dist(rng);
  for (std::size_t i = weights; i < params.size(); ++i) params[i] = 0.0;
}

Tensor Conv2d::forward(std::span<const double> params, const Tensor& in, Cache& cache,
                       const Context&) const {
  const Shape is = in.shape();
  require_shape(is.c == in_channels_, name(), is);
  const Shape os = output_shape(is);
  const int k = kernel_, rows = in_channels_ * k * k, cols = os.h * os.w;

  cache.input = Tensor();  // the column buffer is all backward needs
  cache.saved = Tensor({is.n, rows, cols, 1});
  Tensor out(os);
  ConstMatMap weight(params.data(), out_channels_, rows);
  const double* bias = params.data() + static_cast<std::size_t>(out_channels_) * rows;

  for (int n = 0; n < is.n; ++n) {
    double* col = cache.saved.sample(n).data();
    const double* src = in.sample(n).data();
    for (int c = 0; c < in_channels_; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          double* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * cols;
          for (int oy = 0; oy < os.h; ++oy) {
            const int iy = oy * stride_ - padding_ + ky;
            for (int ox = 0; ox < os.w; ++ox) {
              const int ix = ox * stride_ - padding_ + kx;
              row[oy * os.w + ox] = (iy >= 0 && iy < is.h && ix >= 0 && ix < is.w)
                                        ? src[(static_cast<std::size_t>(c) * is.h + iy) * is.w + ix]
                                        : 0.0;
            }
          }
        }
      }
    }
    MatMap result(out.sample(n).data(), out_channels_, cols);
    result.noalias() = weight * ConstMatMap(col, rows, cols);
    for (int o = 0; o < out_channels_; ++o) result.row(o).array() += bias[o];
  }
  cache.stats = {static_cast<double>(is.h), static_cast<double>(is.w)};
  return out;
}

Tensor Conv2d::backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                        std::span<double> grad_params, bool need_input_grad) const {
  const Shape os = grad_out.shape();
  const int ih = static_cast<int>(cache.stats[0]), iw = static_cast<int>(cache.stats[1]);
  const int k = kernel_, rows = in_channels_ * k * k, cols = os.h * os.w;
  ConstMatMap weight(params.data(), out_channels_, rows);

  Tensor grad_in;
  if (need_input_grad) grad_in = Tensor({os.n, in_channels_, ih, iw});
  RowMatrix grad_col(rows, cols);

  for (int n = 0; n < os.n; ++n) {
    ConstMatMap g(grad_out.sample(n).data(), out_channels_, cols);
    ConstMatMap col(cache.saved.sample(n).data(), rows, cols);
    if (!grad_params.empty()) {
      MatMap gw(grad_params.data(), out_channels_, rows);
      gw.noalias() += g * col.transpose();
      double* gb = grad_params.data() + static_cast<std::size_t>(out_channels_) * rows;
      for (int o = 0; o < out_channels_; ++o) {
        const double* row = grad_out.sample(n).data() + static_cast<std::size_t>(o) * cols;
        gb[o] += std::accumulate(row, row + cols, 0.0);
      }
    }
    if (!need_input_grad) continue;
    grad_col.noalias() = weight.transpose() * g;
    double* dst = grad_in.sample(n).data();
    for (int c = 0; c < in_channels_; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double* row = grad_col.data() + static_cast<std::size_t>((c * k + ky) * k + kx) * cols;
          for (int oy = 0; oy < os.h; ++oy) {
            const int iy = oy * stride_ - padding_ + ky;
            if (iy < 0 || iy >= ih) continue;
            for (int ox = 0; ox < os.w; ++ox) {
              const int ix = ox * stride_ - padding_ + kx;
              if (ix < 0 || ix >= iw) continue;
              dst[(static_cast<std::size_t>(c) * ih + iy) * iw + ix] += row[oy * os.w + ox];
            }
          }
        }
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------- InstanceNorm2d

InstanceNorm2d::InstanceNorm2d(int channels, double eps) : channels_(channels), eps_(eps) {}

std::string InstanceNorm2d::name() const { return "InstanceNorm2d(" + std::to_string(channels_) + ")"; }

void InstanceNorm2d::init_params(std::span<double> params, Rng&) const {
  std::fill(params.begin(), params.begin() + channels_, 1.0);
  std::fill(params.begin() + channels_, params.end(), 0.0);
}

Tensor InstanceNorm2d::forward(std::span<const double> params, const Tensor& in, Cache& cache,
                               const Context&) const {
  const Shape s = in.shape();
  require_shape(s.c == channels_, name(), s);
  const std::size_t plane = s.plane();
  Tensor out(s);
  cache.saved = Tensor(s);
  cache.stats.assign(static_cast<std::size_t>(s.n) * s.c, 0.0);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
      const double* x = in.data() + base;
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) mean += x[i];
      mean /= static_cast<double>(plane);
      double var = 0.0;
      for (std::size_t i = 0; i < plane; ++i) var += (x[i] - mean) * (x[i] - mean);
      var /= static_cast<double>(plane);
      const double inv_std = 1.0 / std::sqrt(var + eps_);
      cache.stats[static_cast<std::size_t>(n) * s.c + c] = inv_std;
      double* xhat = cache.saved.data() + base;
      double* y = out.data() + base;
      for (std::size_t i = 0; i < plane; ++i) {
        xhat[i] = (x[i] - mean) * inv_std;
        y[i] = params[c] * xhat[i] + params[channels_ + c];
      }
    }
  }
  return out;
}

Tensor InstanceNorm2d::backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                                std::span<double> grad_params, bool need_input_grad) const {
  const Shape s = grad_out.shape();
  const std::size_t plane = s.plane();
  const double m = static_cast<double>(plane);
  Tensor grad_in;
  if (need_input_grad) grad_in = Tensor(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * plane;
      const double* dy = grad_out.data() + base;
      const double* xhat = cache.saved.data() + base;
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += dy[i];
        sum_dy_xhat += dy[i] * xhat[i];
      }
      if (!grad_params.empty()) {
        grad_params[c] += sum_dy_xhat;
        grad_params[channels_ + c] += sum_dy;
      }
      if (!need_input_grad) continue;
      const double gamma = params[c];
      const double inv_std = cache.stats[static_cast<std::size_t>(n) * s.c + c];
      double* dx = grad_in.data() + base;
      for (std::size_t i = 0; i < plane; ++i) {
        dx[i] = gamma * inv_std / m * (m * dy[i] - sum_dy - xhat[i] * sum_dy_xhat);
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------- activations

Tensor ReLU::forward(std::span<const double>, const Tensor& in, Cache& cache, const Context&) const {
  Tensor out = in;
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  cache.saved = out;
  return out;
}

Tensor ReLU::backward(std::span<const double>, const Cache& cache, const Tensor& grad_out,
                      std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (cache.saved[i] <= 0.0) g[i] = 0.0;
  }
  return g;
}

Tensor Sigmoid::forward(std::span<const double>, const Tensor& in, Cache& cache, const Context&) const {
  Tensor out = in;
  for (auto& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
  cache.saved = out;
  return out;
}

Tensor Sigmoid::backward(std::span<const double>, const Cache& cache, const Tensor& grad_out,
                         std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = cache.saved[i];
    g[i] *= s * (1.0 - s);
  }
  return g;
}

// ---------------------------------------------------------------- resampling

Tensor Upsample2x::forward(std::span<const double>, const Tensor& in, Cache&, const Context&) const {
  const Shape s = in.shape();
  Tensor out(output_shape(s));
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < 2 * s.h; ++y)
        for (int x = 0; x < 2 * s.w; ++x) out.at(n, c, y, x) = in.at(n, c, y / 2, x / 2);
  return out;
}

Tensor Upsample2x::backward(std::span<const double>, const Cache&, const Tensor& grad_out,
                            std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  const Shape s = grad_out.shape();
  Tensor g({s.n, s.c, s.h / 2, s.w / 2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) g.at(n, c, y / 2, x / 2) += grad_out.at(n, c, y, x);
  return g;
}

Tensor MaxPool2x2::forward(std::span<const double>, const Tensor& in, Cache& cache, const Context&) const {
  const Shape s = in.shape();
  const Shape os = output_shape(s);
  Tensor out(os);
  cache.indices.assign(os.numel(), 0);
  cache.stats = {static_cast<double>(s.h), static_cast<double>(s.w)};
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < os.h; ++y) {
        for (int x = 0; x < os.w; ++x, ++o) {
          std::size_t best = ((static_cast<std::size_t>(n) * s.c + c) * s.h + 2 * y) * s.w + 2 * x;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((static_cast<std::size_t>(n) * s.c + c) * s.h + 2 * y + dy) * s.w + 2 * x + dx;
              if (in[idx] > in[best]) best = idx;
            }
          }
          cache.indices[o] = best;
          out[o] = in[best];
        }
      }
    }
  }
  return out;
}

Tensor MaxPool2x2::backward(std::span<const double>, const Cache& cache, const Tensor& grad_out,
                            std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  const Shape s = grad_out.shape();
  Tensor g({s.n, s.c, static_cast<int>(cache.stats[0]), static_cast<int>(cache.stats[1])});
  for (std::size_t i = 0; i < grad_out.size(); ++i) g[cache.indices[i]] += grad_out[i];
  return g;
}

Tensor AvgPool2x2::forward(std::span<const double>, const Tensor& in, Cache&, const Context&) const {
  const Shape s = in.shape();
  Tensor out(output_shape(s));
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h / 2 * 2; ++y)
        for (int x = 0; x < s.w / 2 * 2; ++x) out.at(n, c, y / 2, x / 2) += 0.25 * in.at(n, c, y, x);
  return out;
}

Tensor AvgPool2x2::backward(std::span<const double>, const Cache&, const Tensor& grad_out,
                            std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  const Shape s = grad_out.shape();
  Tensor g({s.n, s.c, 2 * s.h, 2 * s.w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < 2 * s.h; ++y)
        for (int x = 0; x < 2 * s.w; ++x) g.at(n, c, y, x) = 0.25 * grad_out.at(n, c, y / 2, x / 2);
  return g;
}

Tensor GlobalAvgPool::forward(std::span<const double>, const Tensor& in, Cache& cache, const Context&) const {
  const Shape s = in.shape();
  Tensor out(output_shape(s));
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const double* x = in.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += x[i];
      out.at(n, c, 0, 0) = acc / static_cast<double>(plane);
    }
  }
  cache.stats = {static_cast<double>(s.h), static_cast<double>(s.w)};
  return out;
}

Tensor GlobalAvgPool::backward(std::span<const double>, const Cache& cache, const Tensor& grad_out,
                               std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  const Shape s = grad_out.shape();
  const int h = static_cast<int>(cache.stats[0]), w = static_cast<int>(cache.stats[1]);
  Tensor g({s.n, s.c, h, w});
  const double scale = 1.0 / (static_cast<double>(h) * w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) g.at(n, c, y, x) = grad_out.at(n, c, 0, 0) * scale;
  return g;
}

Tensor Affine::forward(std::span<const double>, const Tensor& in, Cache&, const Context&) const {
  Tensor out = in;
  for (auto& v : out.values()) v = (v - shift_) * scale_;
  return out;
}

Tensor Affine::backward(std::span<const double>, const Cache&, const Tensor& grad_out, std::span<double>,
                        bool need_input_grad) const {
  if (!need_input_grad) return {};
  Tensor g = grad_out;
  g *= scale_;
  return g;
}

Tensor Flatten::forward(std::span<const double>, const Tensor& in, Cache& cache, const Context&) const {
  const Shape s = in.shape();
  cache.stats = {static_cast<double>(s.c), static_cast<double>(s.h), static_cast<double>(s.w)};
  Tensor out = in;
  out.reshape(output_shape(s));
  return out;
}

Tensor Flatten::backward(std::span<const double>, const Cache& cache, const Tensor& grad_out,
                         std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  Tensor g = grad_out;
  g.reshape({grad_out.shape().n, static_cast<int>(cache.stats[0]), static_cast<int>(cache.stats[1]),
             static_cast<int>(cache.stats[2])});
  return g;
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features) : in_features_(in_features), out_features_(out_features) {}

std::string Linear::name() const {
  return "Linear(" + std::to_string(in_features_) + "->" + std::to_string(out_features_) + ")";
}

std::size_t Linear::param_count() const {
  return static_cast<std::size_t>(out_features_) * in_features_ + out_features_;
}

void Linear::init_params(std::span<double> params, Rng& rng) const {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in_features_));
  const std::size_t weights = param_count() - out_features_;
  for (std::size_t i = 0; i < weights; ++i) params[i] = dist(rng);
  for (std::size_t i = weights; i < params.size(); ++i) params[i] = 0.0;
}

Tensor Linear::forward(std::span<const double> params, const Tensor& in, Cache& cache, const Context&) const {
  const Shape s = in.shape();
  require_shape(s.sample_size() == static_cast<std::size_t>(in_features_), name(), s);
  cache.input = in;
  Tensor out({s.n, out_features_, 1, 1});
  ConstMatMap weight(params.data(), out_features_, in_features_);
  Eigen::Map<const Eigen::VectorXd> bias(params.data() + weight.size(), out_features_);
  ConstMatMap x(in.data(), s.n, in_features_);
  MatMap y(out.data(), s.n, out_features_);
  y.noalias() = x * weight.transpose();
  y.rowwise() += bias.transpose();
  return out;
}

Tensor Linear::backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                        std::span<double> grad_params, bool need_input_grad) const {
  const int n = grad_out.shape().n;
  ConstMatMap g(grad_out.data(), n, out_features_);
  ConstMatMap x(cache.input.data(), n, in_features_);
  if (!grad_params.empty()) {
    MatMap gw(grad_params.data(), out_features_, in_features_);
    gw.noalias() += g.transpose() * x;
    for (int o = 0; o < out_features_; ++o) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += g(i, o);
      grad_params[gw.size() + o] += sum;
    }
  }
  if (!need_input_grad) return {};
  Tensor grad_in(cache.input.shape());
  ConstMatMap weight(params.data(), out_features_, in_features_);
  MatMap gx(grad_in.data(), n, in_features_);
  gx.noalias() = g * weight;
  return grad_in;
}

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("Dropout: rate must be in [0, 1)");
}

std::string Dropout::name() const {
  std::ostringstream os;
  os << "Dropout(" << rate_ << ")";
  return os.str();
}

Tensor Dropout::forward(std::span<const double>, const Tensor& in, Cache& cache, const Context& ctx) const {
  if (ctx.mode != Mode::kTrain || rate_ == 0.0) {
    cache.saved = Tensor();
    return in;
  }
  if (ctx.rng == nullptr) throw std::logic_error("Dropout: training mode needs an rng");
  std::bernoulli_distribution keep(1.0 - rate_);
  cache.saved = Tensor(in.shape());
  Tensor out = in;
  const double scale = 1.0 / (1.0 - rate_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    cache.saved[i] = keep(*ctx.rng) ? scale : 0.0;
    out[i] *= cache.saved[i];
  }
  return out;
}

Tensor Dropout::backward(std::span<const double>, const Cache& cache, const Tensor& grad_out,
                         std::span<double>, bool need_input_grad) const {
  if (!need_input_grad) return {};
  if (cache.saved.empty()) return grad_out;
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= cache.saved[i];
  return g;
}

// ---------------------------------------------------------------- Residual

Residual::Residual(Sequential body) : body_(std::move(body)) {}

std::string Residual::name() const { return "Residual[" + body_.describe() + "]"; }

void Residual::init_params(std::span<double> params, Rng& rng) const { body_.init_params(params, rng); }

Tensor Residual::forward(std::span<const double> params, const Tensor& in, Cache& cache,
                         const Context& ctx) const {
  Tensor out = body_.forward(params, in, cache.children, ctx);
  out += in;
  return out;
}

Tensor Residual::backward(std::span<const double> params, const Cache& cache, const Tensor& grad_out,
                          std::span<double> grad_params, bool need_input_grad) const {
  Tensor g = body_.backward(params, cache.children, grad_out, grad_params, need_input_grad);
  if (!need_input_grad) return {};
  g += grad_out;
  return g;
}

std::unique_ptr<Layer> make_residual_block(int channels) {
  Sequential body;
  body.emplace<Conv2d>(channels, channels, 3, 1, 1)
      .emplace<InstanceNorm2d>(channels)
      .emplace<ReLU>()
      .emplace<Conv2d>(channels, channels, 3, 1, 1)
      .emplace<InstanceNorm2d>(channels);
  return std::make_unique<Residual>(std::move(body));
}

}  // namespace nobox::nn
