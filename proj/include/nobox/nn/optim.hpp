#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nobox::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 penalty added to the gradient before the moment updates.
  double weight_decay = 0.0;
};

/// Adam over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t size, AdamOptions options);

  void step(std::span<double> params, std::span<const double> grads);
  std::size_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace nobox::nn
