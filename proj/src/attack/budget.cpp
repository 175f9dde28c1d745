#include "nobox/attack/budget.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nobox::attack {

std::string to_string(Norm norm) { return norm == Norm::kLinf ? "linf" : "l2"; }

Norm norm_from_string(const std::string& name) {
  if (name == "linf") return Norm::kLinf;
  if (name == "l2") return Norm::kL2;
  throw std::invalid_argument("norm: unknown value '" + name + "' (expected linf|l2)");
}

void Budget::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be a finite value >= 0");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be > 0");
}

data::ImageTensor project(const data::ImageTensor& x0, const data::ImageTensor& x, const Budget& budget) {
  if (!x0.same_shape(x)) throw std::invalid_argument("project: shape mismatch");
  return project(x0, x.pixels(), budget);
}

data::ImageTensor project(const data::ImageTensor& x0, std::span<const double> b, const Budget& budget) {
  const auto a = x0.pixels();
  if (a.size() != b.size()) throw std::invalid_argument("project: size mismatch");
  std::vector<double> out(a.size());
  if (budget.norm == Norm::kLinf) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      out[i] = std::clamp(a[i] + std::clamp(b[i] - a[i], -budget.epsilon, budget.epsilon), 0.0, 1.0);
    }
  } else {
    double norm = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) norm += (b[i] - a[i]) * (b[i] - a[i]);
    norm = std::sqrt(norm);
    const double scale = norm > budget.epsilon ? budget.epsilon / norm : 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::clamp(a[i] + scale * (b[i] - a[i]), 0.0, 1.0);
  }
  return data::ImageTensor(x0.channels(), x0.height(), x0.width(), std::move(out));
}

double linf_distance(const data::ImageTensor& a, const data::ImageTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

double l2_distance(const data::ImageTensor& a, const data::ImageTensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.pixels()[i] - b.pixels()[i]) * (a.pixels()[i] - b.pixels()[i]);
  return std::sqrt(s);
}

bool is_feasible(const data::ImageTensor& x0, const data::ImageTensor& x, const Budget& budget) {
  if (!x0.same_shape(x)) return false;
  for (double v : x.pixels()) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return budget.norm == Norm::kLinf ? linf_distance(x0, x) <= budget.epsilon + 1e-9
                                    : l2_distance(x0, x) <= budget.epsilon + 1e-6;
}

}  // namespace nobox::attack
