#include "nobox/data/toy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "nobox/data/io.hpp"

namespace nobox::data {

namespace {

using Color = std::array<double, 3>;

Color random_color(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), u(rng), u(rng)};
}

double distance(const Color& a, const Color& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

double box_sdf(double x, double y, double hx, double hy) {
  const double qx = std::abs(x) - hx, qy = std::abs(y) - hy;
  const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
  return outside + std::min(std::max(qx, qy), 0.0);
}

double triangle_sdf(double x, double y, double half_side) {
  // Equilateral triangle, apex up in image coordinates.
  const double k = std::sqrt(3.0);
  double px = std::abs(x) - half_side;
  double py = -y + half_side / k;
  if (px + k * py > 0.0) {
    const double nx = (px - k * py) / 2.0, ny = (-k * px - py) / 2.0;
    px = nx;
    py = ny;
  }
  px -= std::clamp(px, -2.0 * half_side, 0.0);
  return -std::hypot(px, py) * (py < 0.0 ? -1.0 : 1.0);
}

double shape_sdf(ToyShape shape, double x, double y, double r) {
  switch (shape) {
    case ToyShape::kDisk: return std::hypot(x, y) - r;
    case ToyShape::kSquare: return box_sdf(x, y, 0.8 * r, 0.8 * r);
    case ToyShape::kTriangle: return triangle_sdf(x, y, 1.05 * r);
    case ToyShape::kCross:
      return std::min(box_sdf(x, y, r, 0.3 * r), box_sdf(x, y, 0.3 * r, r));
    case ToyShape::kRing: return std::abs(std::hypot(x, y) - 0.75 * r) - 0.28 * r;
    case ToyShape::kBar: return box_sdf(x, y, 1.1 * r, 0.3 * r);
    case ToyShape::kStripes:
    case ToyShape::kChecker: break;
  }
  return 1.0;
}

bool is_texture(ToyShape shape) { return shape == ToyShape::kStripes || shape == ToyShape::kChecker; }

ImageTensor render_texture(ToyShape shape, const ToyStyle& style, Rng& rng) {
  const int size = style.size, channels = style.channels;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Color bg0 = random_color(rng), bg1 = random_color(rng);
  const Color ink = random_color(rng);
  const double grad_angle = 2.0 * std::numbers::pi * u(rng);
  const double gx = std::cos(grad_angle), gy = std::sin(grad_angle);
  const double theta = std::numbers::pi * u(rng);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double period = style.min_period + (style.max_period - style.min_period) * u(rng);
  const double amplitude = style.min_amplitude + (style.max_amplitude - style.min_amplitude) * u(rng);
  const double phase0 = 2.0 * std::numbers::pi * u(rng), phase1 = 2.0 * std::numbers::pi * u(rng);
  const double k = 2.0 * std::numbers::pi / period;

  std::vector<double> pixels(static_cast<std::size_t>(channels) * size * size);
  std::uniform_real_distribution<double> noise(-style.noise, style.noise);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5 - size / 2.0, py = y + 0.5 - size / 2.0;
      const double t = std::clamp(0.5 + (px * gx + py * gy) / size, 0.0, 1.0);
      const double lx = ct * px + st * py, ly = -st * px + ct * py;
      const double wave = shape == ToyShape::kStripes ? std::sin(k * lx + phase0)
                                                      : std::sin(k * lx + phase0) * std::sin(k * ly + phase1);
      const double a = amplitude * (0.5 + 0.5 * wave);
      Color c;
      for (int ch = 0; ch < 3; ++ch) c[ch] = (1 - a) * ((1 - t) * bg0[ch] + t * bg1[ch]) + a * ink[ch];
      if (channels == 1) {
        const double gray = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
        pixels[static_cast<std::size_t>(y) * size + x] = std::clamp(gray + noise(rng), 0.0, 1.0);
      } else {
        for (int ch = 0; ch < 3; ++ch) {
          pixels[(static_cast<std::size_t>(ch) * size + y) * size + x] = std::clamp(c[ch] + noise(rng), 0.0, 1.0);
        }
      }
    }
  }
  return quantize_8bit(ImageTensor(channels, size, size, std::move(pixels)));
}

}  // namespace

std::string to_string(ToyShape shape) {
  switch (shape) {
    case ToyShape::kDisk: return "disk";
    case ToyShape::kSquare: return "square";
    case ToyShape::kTriangle: return "triangle";
    case ToyShape::kCross: return "cross";
    case ToyShape::kRing: return "ring";
    case ToyShape::kBar: return "bar";
    case ToyShape::kStripes: return "stripes";
    case ToyShape::kChecker: return "checker";
  }
  return "unknown";
}

std::vector<std::string> toy_shape_names() {
  return {"disk", "square", "triangle", "cross", "ring", "bar", "stripes", "checker"};
}

ToyShape toy_shape_from_string(const std::string& name) {
  for (auto s : {ToyShape::kDisk, ToyShape::kSquare, ToyShape::kTriangle, ToyShape::kCross, ToyShape::kRing,
                 ToyShape::kBar, ToyShape::kStripes, ToyShape::kChecker}) {
    if (to_string(s) == name) return s;
  }
  throw DataError(DataErrorKind::kInvalidArgument, "unknown toy shape '" + name + "'");
}

ImageTensor render_toy(ToyShape shape, const ToyStyle& style, Rng& rng) {
  if (is_texture(shape)) return render_texture(shape, style, rng);
  const int size = style.size, channels = style.channels;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const Color bg0 = random_color(rng), bg1 = random_color(rng);
  const Color bg_mean = {(bg0[0] + bg1[0]) / 2, (bg0[1] + bg1[1]) / 2, (bg0[2] + bg1[2]) / 2};
  Color fg = random_color(rng);
  for (int tries = 0; tries < 64 && distance(fg, bg_mean) < style.min_contrast * std::sqrt(3.0); ++tries) {
    fg = random_color(rng);
  }
  const double grad_angle = 2.0 * std::numbers::pi * u(rng);
  const double gx = std::cos(grad_angle), gy = std::sin(grad_angle);

  const double r = size * (style.min_radius + (style.max_radius - style.min_radius) * u(rng));
  const double margin = 0.9 * r;
  const double free = (size - 2 * margin) * style.position_jitter;
  const double cx = size / 2.0 + free * (u(rng) - 0.5);
  const double cy = size / 2.0 + free * (u(rng) - 0.5);
  const double theta = 2.0 * std::numbers::pi * u(rng);
  const double ct = std::cos(theta), st = std::sin(theta);

  struct Blob {
    double x, y, r;
    Color color;
  };
  std::vector<Blob> blobs;
  for (int i = 0; i < style.distractors; ++i) {
    blobs.push_back({size * u(rng), size * u(rng), 0.6 + 1.2 * u(rng), random_color(rng)});
  }

  std::vector<double> pixels(static_cast<std::size_t>(channels) * size * size);
  std::uniform_real_distribution<double> noise(-style.noise, style.noise);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double t = std::clamp(0.5 + ((px - size / 2.0) * gx + (py - size / 2.0) * gy) / size, 0.0, 1.0);
      Color c;
      for (int ch = 0; ch < 3; ++ch) c[ch] = (1 - t) * bg0[ch] + t * bg1[ch];
      for (const auto& b : blobs) {
        const double a = std::clamp(0.5 - (std::hypot(px - b.x, py - b.y) - b.r), 0.0, 1.0);
        for (int ch = 0; ch < 3; ++ch) c[ch] = (1 - a) * c[ch] + a * b.color[ch];
      }
      const double lx = ct * (px - cx) + st * (py - cy);
      const double ly = -st * (px - cx) + ct * (py - cy);
      const double a = std::clamp(0.5 - shape_sdf(shape, lx, ly, r), 0.0, 1.0);
      for (int ch = 0; ch < 3; ++ch) c[ch] = (1 - a) * c[ch] + a * fg[ch];
      if (channels == 1) {
        const double gray = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
        pixels[static_cast<std::size_t>(y) * size + x] = std::clamp(gray + noise(rng), 0.0, 1.0);
      } else {
        for (int ch = 0; ch < 3; ++ch) {
          pixels[(static_cast<std::size_t>(ch) * size + y) * size + x] = std::clamp(c[ch] + noise(rng), 0.0, 1.0);
        }
      }
    }
  }
  // Store on the 8-bit grid so in-memory data matches what a PNG round trip yields.
  return quantize_8bit(ImageTensor(channels, size, size, std::move(pixels)));
}

std::map<std::string, std::vector<ImageTensor>> generate_toy_dataset(const std::vector<ToyShape>& shapes,
                                                                     int per_class, const ToyStyle& style,
                                                                     std::uint64_t seed) {
  std::map<std::string, std::vector<ImageTensor>> out;
  for (std::size_t c = 0; c < shapes.size(); ++c) {
    auto& images = out[to_string(shapes[c])];
    for (int i = 0; i < per_class; ++i) {
      Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(shapes[c])), static_cast<std::uint64_t>(i)));
      images.push_back(render_toy(shapes[c], style, rng));
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& root, const std::map<std::string, std::vector<ImageTensor>>& dataset) {
  for (const auto& [name, images] : dataset) {
    const auto dir = root / name;
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < images.size(); ++i) {
      char file[32];
      std::snprintf(file, sizeof(file), "%05zu.png", i);
      write_png(dir / file, images[i]);
    }
  }
}

}  // namespace nobox::data
