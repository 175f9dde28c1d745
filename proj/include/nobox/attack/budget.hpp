#pragma once

#include <span>
#include <string>

#include "nobox/data/image.hpp"

namespace nobox::attack {

enum class Norm { kLinf, kL2 };

std::string to_string(Norm norm);
Norm norm_from_string(const std::string& name);

/// Perturbation budget in pixel-intensity units (images live in [0, 1]).
struct Budget {
  Norm norm = Norm::kLinf;
  double epsilon = 0.1;
  double step_size = 1.0 / 255.0;

  /// epsilon = 0 is accepted and collapses every attack onto x0.
  void validate() const;
};

/// Clamps x - x0 into the budget ball, then clamps into [0, 1].
data::ImageTensor project(const data::ImageTensor& x0, const data::ImageTensor& x, const Budget& budget);
/// Same on raw values, which may lie outside [0, 1].
data::ImageTensor project(const data::ImageTensor& x0, std::span<const double> x, const Budget& budget);

double linf_distance(const data::ImageTensor& a, const data::ImageTensor& b);
double l2_distance(const data::ImageTensor& a, const data::ImageTensor& b);

/// Tolerances: 1e-9 for the max norm, 1e-6 for the Euclidean norm.
bool is_feasible(const data::ImageTensor& x0, const data::ImageTensor& x, const Budget& budget);

}  // namespace nobox::attack
