#include "nobox/data/transforms.hpp"

#include <algorithm>
#include <sstream>

namespace nobox::data {

ImageTensor rotate(const ImageTensor& image, int angle_degrees) {
  const int c = image.channels(), h = image.height(), w = image.width();
  const int turns = ((angle_degrees % 360) + 360) % 360 / 90;
  if (angle_degrees % 90 != 0) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "rotate: angle must be a multiple of 90, got " + std::to_string(angle_degrees));
  }
  if (turns % 2 == 1 && h != w) {
    throw DataError(DataErrorKind::kInvalidArgument, "rotate: quarter turns need a square image");
  }
  std::vector<double> out(image.size());
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int sy = y, sx = x;
        switch (turns) {
          case 1: sy = x; sx = w - 1 - y; break;
          case 2: sy = h - 1 - y; sx = w - 1 - x; break;
          case 3: sy = h - 1 - x; sx = y; break;
          default: break;
        }
        out[(static_cast<std::size_t>(ch) * h + y) * w + x] = image.at(ch, sy, sx);
      }
    }
  }
  return ImageTensor(c, h, w, std::move(out));
}

bool is_bijection(const TileOrder& order) {
  std::array<bool, 4> seen{};
  for (int t : order) {
    if (t < 0 || t > 3 || seen[t]) return false;
    seen[t] = true;
  }
  return true;
}

TileOrder inverse(const TileOrder& order) {
  if (!is_bijection(order)) {
    throw DataError(DataErrorKind::kInvalidArgument, "jigsaw: tile order is not a permutation");
  }
  TileOrder inv{};
  for (int i = 0; i < 4; ++i) inv[order[i]] = i;
  return inv;
}

TileOrder tile_order_from_index(int index) {
  if (index < 0 || index >= 24) {
    throw DataError(DataErrorKind::kInvalidArgument, "jigsaw: tile order index outside [0, 24)");
  }
  TileOrder order{0, 1, 2, 3};
  for (int i = 0; i < index; ++i) std::next_permutation(order.begin(), order.end());
  return order;
}

ImageTensor jigsaw(const ImageTensor& image, const TileOrder& order) {
  if (!is_bijection(order)) {
    throw DataError(DataErrorKind::kInvalidArgument, "jigsaw: tile order is not a permutation");
  }
  const int c = image.channels(), h = image.height(), w = image.width();
  const int th = h / 2, tw = w / 2;
  std::vector<double> out(image.size());
  for (int tile = 0; tile < 4; ++tile) {
    const int src = order[tile];
    const int oy = (tile / 2) * th, ox = (tile % 2) * tw;
    const int sy = (src / 2) * th, sx = (src % 2) * tw;
    for (int ch = 0; ch < c; ++ch) {
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          out[(static_cast<std::size_t>(ch) * h + oy + y) * w + ox + x] = image.at(ch, sy + y, sx + x);
        }
      }
    }
  }
  return ImageTensor(c, h, w, std::move(out));
}

std::string ChaosDescriptor::str() const {
  std::ostringstream os;
  if (kind == ChaosKind::kRotation) {
    os << "rotation:" << angle;
  } else {
    os << "jigsaw:" << order[0] << order[1] << order[2] << order[3];
  }
  return os.str();
}

ChaosDescriptor sample_chaos(ChaosKind kind, Rng& rng) {
  ChaosDescriptor d;
  d.kind = kind;
  if (kind == ChaosKind::kRotation) {
    d.angle = 90 * std::uniform_int_distribution<int>(0, 3)(rng);
  } else {
    d.order = tile_order_from_index(std::uniform_int_distribution<int>(0, 23)(rng));
  }
  return d;
}

ImageTensor apply_chaos(const ImageTensor& image, const ChaosDescriptor& descriptor) {
  return descriptor.kind == ChaosKind::kRotation ? rotate(image, descriptor.angle)
                                                 : jigsaw(image, descriptor.order);
}

ChaosResult chaos_transform(const ImageTensor& image, ChaosKind kind, std::uint64_t seed) {
  Rng rng(seed);
  auto descriptor = sample_chaos(kind, rng);
  return {apply_chaos(image, descriptor), descriptor};
}

ImageTensor flip_horizontal(const ImageTensor& image) {
  const int c = image.channels(), h = image.height(), w = image.width();
  std::vector<double> out(image.size());
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[(static_cast<std::size_t>(ch) * h + y) * w + x] = image.at(ch, y, w - 1 - x);
  return ImageTensor(c, h, w, std::move(out));
}

ImageTensor padded_crop(const ImageTensor& image, int pad, int dy, int dx) {
  const int c = image.channels(), h = image.height(), w = image.width();
  std::vector<double> out(image.size(), 0.0);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      const int sy = y + dy - pad;
      if (sy < 0 || sy >= h) continue;
      for (int x = 0; x < w; ++x) {
        const int sx = x + dx - pad;
        if (sx < 0 || sx >= w) continue;
        out[(static_cast<std::size_t>(ch) * h + y) * w + x] = image.at(ch, sy, sx);
      }
    }
  }
  return ImageTensor(c, h, w, std::move(out));
}

}  // namespace nobox::data
