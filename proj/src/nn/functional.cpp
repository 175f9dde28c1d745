#include "nobox/nn/functional.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nobox::nn {

std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - top));
  for (auto& v : p) v /= z;
  return p;
}

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad_logits) {
  const int n = logits.shape().n;
  const int classes = static_cast<int>(logits.shape().sample_size());
  if (static_cast<int>(labels.size()) != n) throw std::invalid_argument("cross-entropy: label count mismatch");
  if (grad_logits) *grad_logits = Tensor(logits.shape());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= classes) throw std::invalid_argument("cross-entropy: label out of range");
    const auto row = logits.sample(i);
    const double top = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - top);
    const double log_z = top + std::log(z);
    loss += log_z - row[labels[i]];
    if (grad_logits) {
      auto g = grad_logits->sample(i);
      for (int c = 0; c < classes; ++c) g[c] = std::exp(row[c] - log_z) / n;
      g[labels[i]] -= 1.0 / n;
    }
  }
  return loss / n;
}

}  // namespace nobox::nn
