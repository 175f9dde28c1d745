#pragma once

#include <span>
#include <vector>

#include "nobox/data/image.hpp"
#include "nobox/model/substitute.hpp"

namespace nobox::eval {

/// Nearest-prototype label for a single-decoder model (unsquared Euclidean
/// distance). Ties go to class 0. Throws std::invalid_argument when K > 1.
int prototype_classify(const model::SubstituteModel& model, const data::ImageTensor& x,
                       const data::PrototypeBank& bank);

/// Averages the unsquared distances over decoders, then takes the argmin.
/// Throws std::invalid_argument when bank and model disagree on K.
int prototype_classify_multi(const model::SubstituteModel& model, const data::ImageTensor& x,
                             const data::PrototypeBank& bank);

/// Same rule applied to precomputed reconstructions (one span per decoder).
int classify_reconstructions(const std::vector<std::span<const double>>& reconstructions,
                             const data::PrototypeBank& bank);

/// Per-class mean distance (index 0 and 1) used by the rule above.
std::vector<double> prototype_distances(const std::vector<std::span<const double>>& reconstructions,
                                        const data::PrototypeBank& bank);

}  // namespace nobox::eval
