#include "egmlatent/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

#include "egmlatent/core/error.hpp"

namespace egmlatent {

std::size_t element_count(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, float fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (element_count(shape_) != data_.size()) {
    throw Error(ErrorKind::Dimension, "shape " + shape_string(shape_) + " does not match " +
                                          std::to_string(data_.size()) + " values");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw Error(ErrorKind::Dimension, "axis " + std::to_string(axis) + " out of range for " +
                                          shape_string(shape_));
  }
  return shape_[axis];
}

void Tensor::reshape(Shape shape) {
  if (element_count(shape) != data_.size()) {
    throw Error(ErrorKind::Dimension,
                "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor copy = *this;
  copy.reshape(std::move(shape));
  return copy;
}

void Tensor::fill(float value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Parameter::Parameter(Tensor initial) : value(std::move(initial)), grad(value.shape()) {}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::Dimension, "dot of " + shape_string(a.shape()) + " and " +
                                          shape_string(b.shape()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += double(a[i]) * double(b[i]);
  return sum;
}

}  // namespace egmlatent
