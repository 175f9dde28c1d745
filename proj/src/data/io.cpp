#include "nobox/data/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace nobox::data {

namespace fs = std::filesystem;

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct RawImage {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  double at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

RawImage from_interleaved(const std::vector<std::uint8_t>& buffer, int channels, int height,
                          int width) {
  std::vector<double> pixels(buffer.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        pixels[(static_cast<std::size_t>(c) * height + y) * width + x] =
            buffer[(static_cast<std::size_t>(y) * width + x) * channels + c] / 255.0;
      }
    }
  }
  return {channels, height, width, std::move(pixels)};
}

RawImage resize_raw(const RawImage& image, int height, int width) {
  const int c = image.channels, h = image.height, w = image.width;
  if (h == height && w == width) return image;
  RawImage out{c, height, width, std::vector<double>(static_cast<std::size_t>(c) * height * width)};
  const double sy = static_cast<double>(h) / height, sx = static_cast<double>(w) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, h - 1);
    const double ay = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, w - 1);
      const double ax = fx - x0;
      for (int ch = 0; ch < c; ++ch) {
        const double top = (1 - ax) * image.at(ch, y0, x0) + ax * image.at(ch, y0, x1);
        const double bottom = (1 - ax) * image.at(ch, y1, x0) + ax * image.at(ch, y1, x1);
        out.pixels[(static_cast<std::size_t>(ch) * height + y) * width + x] =
            std::clamp((1 - ay) * top + ay * bottom, 0.0, 1.0);
      }
    }
  }
  return out;
}

ImageTensor to_image(RawImage raw) {
  return ImageTensor(raw.channels, raw.height, raw.width, std::move(raw.pixels));
}

std::vector<std::uint8_t> to_interleaved(const ImageTensor& image) {
  const int c = image.channels(), h = image.height(), w = image.width();
  std::vector<std::uint8_t> buffer(image.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        buffer[(static_cast<std::size_t>(y) * w + x) * c + ch] = to_byte(image.at(ch, y, x));
  return buffer;
}

RawImage finish_read(png_image& img, const std::string& origin) {
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw DataError(DataErrorKind::kDecodeFailure, "png: cannot decode " + origin + ": " + msg);
  }
  return from_interleaved(buffer, channels, static_cast<int>(img.height), static_cast<int>(img.width));
}

RawImage read_raw(const fs::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw DataError(DataErrorKind::kDecodeFailure,
                    "png: cannot decode " + path.string() + ": " + img.message);
  }
  return finish_read(img, path.string());
}

}  // namespace

ImageTensor read_png(const fs::path& path) { return to_image(read_raw(path)); }

ImageTensor decode_png(std::span<const std::uint8_t> bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw DataError(DataErrorKind::kDecodeFailure, std::string("png: cannot decode buffer: ") + img.message);
  }
  return to_image(finish_read(img, "buffer"));
}

std::vector<std::uint8_t> encode_png(const ImageTensor& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto buffer = to_interleaved(image);
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, buffer.data(), 0, nullptr)) {
    throw DataError(DataErrorKind::kEncodeFailure, std::string("png: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, buffer.data(), 0, nullptr)) {
    throw DataError(DataErrorKind::kEncodeFailure, std::string("png: ") + img.message);
  }
  out.resize(size);
  return out;
}

void write_png(const fs::path& path, const ImageTensor& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(DataErrorKind::kEncodeFailure, "png: cannot write " + path.string());
}

ImageTensor resize_bilinear(const ImageTensor& image, int height, int width) {
  RawImage raw{image.channels(), image.height(), image.width(), image.vector()};
  return to_image(resize_raw(raw, height, width));
}

ImageTensor quantize_8bit(const ImageTensor& image) {
  std::vector<double> out(image.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(image.pixels()[i]) / 255.0;
  return ImageTensor(image.channels(), image.height(), image.width(), std::move(out));
}

std::vector<std::string> list_class_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw DataError(DataErrorKind::kMissingPath, "data root not found: " + root.string());
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<ImageTensor> load_class_dir(const fs::path& dir, const ImageGeometry& expected) {
  if (!fs::is_directory(dir)) {
    throw DataError(DataErrorKind::kMissingPath, "class directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png") files.push_back(entry.path());
  }
  if (files.empty()) {
    throw DataError(DataErrorKind::kNoImages, "no images found in " + dir.string());
  }
  std::sort(files.begin(), files.end());

  std::vector<ImageTensor> images;
  images.reserve(files.size());
  for (const auto& file : files) {
    auto raw = read_raw(file);
    if (raw.channels != expected.channels) {
      throw DataError(DataErrorKind::kChannelMismatch,
                      file.string() + ": expected " + std::to_string(expected.channels) +
                          " channels, found " + std::to_string(raw.channels));
    }
    images.push_back(to_image(resize_raw(raw, expected.height, expected.width)));
  }
  return images;
}

}  // namespace nobox::data
