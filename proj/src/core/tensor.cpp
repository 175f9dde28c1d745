#include "nobox/core/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nobox {

std::string Shape::str() const {
  std::ostringstream os;
  os << '[' << n << ',' << c << ',' << h << ',' << w << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.numel()) {
    throw std::invalid_argument("tensor: " + std::to_string(data_.size()) +
                                " values do not fill shape " + shape_.str());
  }
}

std::span<double> Tensor::sample(int i) {
  const auto stride = shape_.sample_size();
  return std::span<double>(data_).subspan(static_cast<std::size_t>(i) * stride, stride);
}

std::span<const double> Tensor::sample(int i) const {
  const auto stride = shape_.sample_size();
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(i) * stride, stride);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(Shape shape) {
  if (shape.numel() != data_.size()) {
    throw std::invalid_argument("tensor: cannot reshape " + shape_.str() + " to " + shape.str());
  }
  shape_ = shape;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.size() != size()) throw std::invalid_argument("tensor: size mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  if (other.size() != size()) throw std::invalid_argument("tensor: size mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (auto& v : data_) v *= scale;
  return *this;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

double Tensor::dot(const Tensor& other) const {
  if (other.size() != size()) throw std::invalid_argument("tensor: size mismatch in dot");
  double s = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) s += data_[i] * other.data_[i];
  return s;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out -= b;
  return out;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

}  // namespace nobox
