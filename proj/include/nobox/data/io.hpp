#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nobox/data/image.hpp"

namespace nobox::data {

struct ImageGeometry {
  int channels = 3;
  int height = 32;
  int width = 32;
};

/// Decodes every PNG in `dir` (lexicographic file order), resizing to `expected`
/// with bilinear interpolation when the spatial size differs.
/// Errors: kMissingPath, kNoImages, kDecodeFailure, kChannelMismatch.
std::vector<ImageTensor> load_class_dir(const std::filesystem::path& dir, const ImageGeometry& expected);

/// Sorted names of the immediate subdirectories of `root`.
std::vector<std::string> list_class_dirs(const std::filesystem::path& root);

ImageTensor read_png(const std::filesystem::path& path);
ImageTensor decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const ImageTensor& image);
void write_png(const std::filesystem::path& path, const ImageTensor& image);

/// Half-pixel-centred bilinear resize; output clamped to [0, 1].
ImageTensor resize_bilinear(const ImageTensor& image, int height, int width);

/// Rounds each value to the nearest multiple of 1/255.
ImageTensor quantize_8bit(const ImageTensor& image);

}  // namespace nobox::data
