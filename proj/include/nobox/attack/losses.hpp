#pragma once

#include <span>
#include <vector>

#include "nobox/data/image.hpp"
#include "nobox/model/substitute.hpp"

namespace nobox::attack {

enum class LossKind { kEuclidean, kCosine };

/// Positive prototype of the target's class and opposite-class negatives.
struct GuideSet {
  data::ImageTensor positive;
  std::vector<data::ImageTensor> negatives;

  /// Throws std::invalid_argument on empty negatives or a shape mismatch with `like`.
  void validate(const data::ImageTensor& like) const;
};

/// -log of the positive's share in softmax_j(-lambda * ||r - g_j||^2) over
/// {positive} and the negatives. When grad is non-empty it receives dL/dr.
double softmax_prototype_loss(std::span<const double> reconstruction, std::span<const double> positive,
                              const std::vector<std::span<const double>>& negatives, double lambda,
                              std::span<double> grad = {});

/// Same softmax over lambda * cos(e, e_j). Throws std::domain_error when any
/// embedding norm is below 1e-12.
double cosine_prototype_loss(std::span<const double> embedding, std::span<const double> positive,
                             const std::vector<std::span<const double>>& negatives, double lambda,
                             std::span<double> grad = {});

inline constexpr double kCosineNormGuard = 1e-12;

/// Euclidean loss on decoder k's reconstruction of x.
double adversarial_loss(const model::SubstituteModel& model, const data::ImageTensor& x, const GuideSet& guides,
                        double lambda, int k);

/// Cosine loss on decoder k's embedding of x, the positive and the negatives.
double adversarial_loss_cosine(const model::SubstituteModel& model, const data::ImageTensor& x,
                               const GuideSet& guides, double lambda, int k);

}  // namespace nobox::attack
