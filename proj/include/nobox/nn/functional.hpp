#pragma once

#include <span>
#include <vector>

#include "nobox/core/tensor.hpp"

namespace nobox::nn {

/// Mean softmax cross-entropy over the batch. logits: [N, classes, 1, 1].
/// When grad_logits is non-null it receives dLoss/dlogits.
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad_logits);

std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest value; the first one wins ties.
int argmax(std::span<const double> values);

}  // namespace nobox::nn
