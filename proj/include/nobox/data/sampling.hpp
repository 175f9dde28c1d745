#pragma once

#include <cstdint>
#include <span>

#include "nobox/data/image.hpp"

namespace nobox::data {

struct TargetRef {
  int label = 0;
  std::size_t index = 0;  // index into that class's image list
};

/// Draws n/2 images per class (the target always included) deterministically from `seed`.
/// Class-0 examples come first; the target's position is recorded in target_index.
AuxiliarySet sample_auxiliary_set(std::span<const ImageTensor> class0, std::span<const ImageTensor> class1,
                                  std::size_t n, TargetRef target, std::uint64_t seed);

/// Draws `decoders` (class-0, class-1) pairs. Pairs are distinct whenever
/// |class0| * |class1| >= decoders, otherwise drawn with replacement.
PrototypeBank sample_prototype_bank(const AuxiliarySet& aux, std::size_t decoders, std::uint64_t seed);

}  // namespace nobox::data
