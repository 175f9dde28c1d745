#include "nobox/data/image.hpp"

#include <algorithm>
#include <cmath>

namespace nobox::data {

namespace {

void check_geometry(int channels, int height, int width, std::size_t count) {
  if (channels != 1 && channels != 3) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "image: channel count must be 1 or 3, got " + std::to_string(channels));
  }
  if (height <= 0 || width <= 0 || height % 2 != 0 || width % 2 != 0) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "image: height and width must be positive and even, got " +
                        std::to_string(height) + "x" + std::to_string(width));
  }
  if (count != static_cast<std::size_t>(channels) * height * width) {
    throw DataError(DataErrorKind::kInvalidArgument, "image: pixel count does not match shape");
  }
}

}  // namespace

ImageTensor::ImageTensor(int channels, int height, int width, std::vector<double> pixels)
    : channels_(channels), height_(height), width_(width), pixels_(std::move(pixels)) {
  check_geometry(channels_, height_, width_, pixels_.size());
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError(DataErrorKind::kInvalidArgument, "image: pixel value outside [0, 1]");
    }
  }
}

ImageTensor ImageTensor::filled(int channels, int height, int width, double value) {
  return ImageTensor(channels, height, width,
                     std::vector<double>(static_cast<std::size_t>(channels) * height * width, value));
}

ImageTensor ImageTensor::clamped(int channels, int height, int width, std::vector<double> pixels) {
  for (double& v : pixels) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
  return ImageTensor(channels, height, width, std::move(pixels));
}

ImageTensor ImageTensor::from_tensor(const Tensor& batch, int index) {
  const auto& s = batch.shape();
  auto values = batch.sample(index);
  return ImageTensor(s.c, s.h, s.w, std::vector<double>(values.begin(), values.end()));
}

Tensor stack(std::span<const ImageTensor> images) {
  if (images.empty()) throw DataError(DataErrorKind::kInvalidArgument, "stack: no images");
  const auto& first = images.front();
  Tensor out(first.shape().with_batch(static_cast<int>(images.size())));
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(first)) {
      throw DataError(DataErrorKind::kInvalidArgument, "stack: images differ in shape");
    }
    std::copy(images[i].pixels().begin(), images[i].pixels().end(),
              out.sample(static_cast<int>(i)).begin());
  }
  return out;
}

void AuxiliarySet::validate() const {
  const auto n = examples.size();
  if (n < kMinSize || n > kMaxSize) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "auxiliary set: size " + std::to_string(n) + " outside [2, 40]");
  }
  bool has0 = false, has1 = false;
  for (const auto& ex : examples) {
    if (ex.label != 0 && ex.label != 1) {
      throw DataError(DataErrorKind::kInvalidArgument, "auxiliary set: label outside {0, 1}");
    }
    if (!ex.image.same_shape(examples.front().image)) {
      throw DataError(DataErrorKind::kInvalidArgument, "auxiliary set: images differ in shape");
    }
    (ex.label == 0 ? has0 : has1) = true;
  }
  if (!has0 || !has1) {
    throw DataError(DataErrorKind::kInvalidArgument, "auxiliary set: both classes must be present");
  }
  if (target_index >= n) {
    throw DataError(DataErrorKind::kInvalidTarget, "auxiliary set: target index out of range");
  }
}

std::vector<ImageTensor> AuxiliarySet::images() const {
  std::vector<ImageTensor> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.image);
  return out;
}

std::vector<std::size_t> AuxiliarySet::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].label == label) out.push_back(i);
  }
  return out;
}

}  // namespace nobox::data
