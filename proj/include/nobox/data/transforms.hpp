#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "nobox/core/rng.hpp"
#include "nobox/data/image.hpp"

namespace nobox::data {

/// Tiles in row-major order: top-left, top-right, bottom-left, bottom-right.
using TileOrder = std::array<int, 4>;

/// Rotates counter-clockwise by 0, 90, 180 or 270 degrees.
/// Quarter turns require a square image.
ImageTensor rotate(const ImageTensor& image, int angle_degrees);

/// Output tile i is input tile order[i].
ImageTensor jigsaw(const ImageTensor& image, const TileOrder& order);

TileOrder inverse(const TileOrder& order);
bool is_bijection(const TileOrder& order);
/// The k-th (0..23) tile order in lexicographic order.
TileOrder tile_order_from_index(int index);

enum class ChaosKind { kRotation, kJigsaw };

struct ChaosDescriptor {
  ChaosKind kind = ChaosKind::kRotation;
  int angle = 0;                  // rotation only
  TileOrder order{0, 1, 2, 3};    // jigsaw only

  std::string str() const;
  friend bool operator==(const ChaosDescriptor&, const ChaosDescriptor&) = default;
};

struct ChaosResult {
  ImageTensor image;
  ChaosDescriptor descriptor;
};

/// Samples one of the four angles or 24 tile orders uniformly from `seed` and applies it.
ChaosResult chaos_transform(const ImageTensor& image, ChaosKind kind, std::uint64_t seed);
ChaosDescriptor sample_chaos(ChaosKind kind, Rng& rng);
ImageTensor apply_chaos(const ImageTensor& image, const ChaosDescriptor& descriptor);

ImageTensor flip_horizontal(const ImageTensor& image);
/// Zero-pads by `pad` on each side and crops back at offset (dy, dx) in [0, 2*pad].
ImageTensor padded_crop(const ImageTensor& image, int pad, int dy, int dx);

}  // namespace nobox::data
