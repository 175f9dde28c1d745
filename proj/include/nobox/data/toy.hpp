#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nobox/core/rng.hpp"
#include "nobox/data/image.hpp"

namespace nobox::data {

/// Procedural classes: shapes over cluttered, randomly coloured backgrounds, and
/// two texture classes (1-D stripes, 2-D checker grating) blended over the background.
enum class ToyShape { kDisk, kSquare, kTriangle, kCross, kRing, kBar, kStripes, kChecker };

std::string to_string(ToyShape shape);
ToyShape toy_shape_from_string(const std::string& name);
std::vector<std::string> toy_shape_names();

struct ToyStyle {
  int size = 16;
  int channels = 3;
  double noise = 0.04;        // per-pixel uniform noise amplitude
  int distractors = 2;        // small random blobs per image
  double min_contrast = 0.25; // foreground/background colour distance floor
  double position_jitter = 1.0;  // fraction of the free range the centre may move
  double min_radius = 0.22;      // shape radius range, in units of `size`
  double max_radius = 0.34;
  double min_period = 3.0;       // texture period range, pixels
  double max_period = 6.0;
  double min_amplitude = 0.25;   // texture contrast range
  double max_amplitude = 0.6;
};

ImageTensor render_toy(ToyShape shape, const ToyStyle& style, Rng& rng);

/// `per_class` images per shape; image i of class c depends only on (seed, c, i).
std::map<std::string, std::vector<ImageTensor>> generate_toy_dataset(const std::vector<ToyShape>& shapes,
                                                                     int per_class, const ToyStyle& style,
                                                                     std::uint64_t seed);

/// Writes `<root>/<class>/<index>.png`.
void write_dataset(const std::filesystem::path& root,
                   const std::map<std::string, std::vector<ImageTensor>>& dataset);

}  // namespace nobox::data
