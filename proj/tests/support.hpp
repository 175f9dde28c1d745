#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "nobox/core/rng.hpp"
#include "nobox/data/image.hpp"

namespace nobox::test {

inline data::ImageTensor random_image(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> px(static_cast<std::size_t>(c) * h * w);
  for (auto& v : px) v = u(rng);
  return data::ImageTensor(c, h, w, std::move(px));
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Two-class auxiliary set of random images, class 0 first.
inline data::AuxiliarySet random_aux(int per_class, int c, int h, int w, std::uint64_t seed) {
  data::AuxiliarySet aux;
  for (int y = 0; y < 2; ++y) {
    for (int i = 0; i < per_class; ++i) {
      aux.examples.push_back({random_image(c, h, w, derive_seed(seed, static_cast<std::uint64_t>(y * 1000 + i))), y});
    }
  }
  return aux;
}

/// Central difference of f along coordinate i of x.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor); the floor keeps near-zero gradients from
/// dominating the comparison.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct FdProbe {
  double numeric = 0.0;
  /// False when the central differences at h and h/10 disagree, i.e. a ReLU or
  /// max-pool kink lies inside [x - h, x + h] and the difference quotient is not
  /// a derivative estimate.
  bool smooth = true;
};

inline FdProbe fd_probe(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                        std::size_t i, double h, double floor = 1e-6) {
  const double coarse = central_difference(f, x, i, h);
  const double fine = central_difference(f, x, i, h / 10.0);
  return {coarse, relative_error(coarse, fine, floor) < 1e-3};
}


}  // namespace nobox::test
