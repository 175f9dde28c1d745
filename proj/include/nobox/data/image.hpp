#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nobox/core/tensor.hpp"

namespace nobox::data {

enum class DataErrorKind {
  kMissingPath,
  kNoImages,
  kDecodeFailure,
  kChannelMismatch,
  kEncodeFailure,
  kInsufficientImages,
  kInvalidTarget,
  kInvalidArgument,
};

class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  DataErrorKind kind() const { return kind_; }

 private:
  DataErrorKind kind_;
};

/// A single [C, H, W] image with every value in [0, 1] and even H, W.
class ImageTensor {
 public:
  ImageTensor() = default;
  /// Throws DataError(kInvalidArgument) when the invariants do not hold.
  ImageTensor(int channels, int height, int width, std::vector<double> pixels);

  static ImageTensor filled(int channels, int height, int width, double value);
  /// Clamps each value into [0, 1] before validating the geometry.
  static ImageTensor clamped(int channels, int height, int width, std::vector<double> pixels);
  /// Takes sample `index` of a batch tensor.
  static ImageTensor from_tensor(const Tensor& batch, int index = 0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  Shape shape() const { return {1, channels_, height_, width_}; }
  bool same_shape(const ImageTensor& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  std::span<const double> pixels() const { return pixels_; }
  const std::vector<double>& vector() const { return pixels_; }
  double at(int c, int y, int x) const {
    return pixels_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  Tensor as_tensor() const { return Tensor(shape(), pixels_); }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

/// Stacks same-shaped images into an [N, C, H, W] batch.
Tensor stack(std::span<const ImageTensor> images);

struct LabeledImage {
  ImageTensor image;
  int label = 0;
};

/// The tiny two-class training set, including the benign instance to perturb.
struct AuxiliarySet {
  std::vector<LabeledImage> examples;
  std::size_t target_index = 0;

  static constexpr std::size_t kMinSize = 2;
  static constexpr std::size_t kMaxSize = 40;

  /// Throws DataError when size, class presence, labels, shapes, or target are invalid.
  void validate() const;

  std::size_t size() const { return examples.size(); }
  const LabeledImage& target() const { return examples.at(target_index); }
  std::vector<ImageTensor> images() const;
  std::vector<std::size_t> indices_of(int label) const;
};

struct PrototypePair {
  std::size_t class0_index = 0;  // index into the auxiliary set
  std::size_t class1_index = 0;
  ImageTensor class0;
  ImageTensor class1;

  const ImageTensor& of(int label) const { return label == 0 ? class0 : class1; }
};

/// One (class-0, class-1) prototype pair per decoder.
struct PrototypeBank {
  std::vector<PrototypePair> pairs;

  std::size_t decoder_count() const { return pairs.size(); }
};

}  // namespace nobox::data
