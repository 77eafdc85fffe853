#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace egmlatent {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

/// Dense row-major float32 array. The element count always equals the
/// product of the shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Reinterprets the buffer; the element count must not change.
  void reshape(Shape shape);
  Tensor reshaped(Shape shape) const;
  void fill(float value) noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// A trainable value paired with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  explicit Parameter(Tensor initial);

  void zero_grad() noexcept { grad.fill(0.0f); }

  Tensor value;
  Tensor grad;
};

double dot(const Tensor& a, const Tensor& b);

}  // namespace egmlatent
