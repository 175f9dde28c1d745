#include "nobox/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace nobox::nn {

Adam::Adam(std::size_t size, AdamOptions options) : options_(options), m_(size, 0.0), v_(size, 0.0) {
  if (options.learning_rate <= 0.0) throw std::invalid_argument("Adam: learning rate must be > 0");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("Adam: parameter/gradient size mismatch");
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step = options_.learning_rate / c1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + options_.weight_decay * params[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    params[i] -= step * m_[i] / (std::sqrt(v_[i] / c2) + options_.eps);
  }
}

}  // namespace nobox::nn
