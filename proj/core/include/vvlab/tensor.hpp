#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace vvlab {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major f32 array with an explicit shape.
///
/// A default-constructed Tensor is the empty placeholder (no shape, no data).
/// Every other Tensor has positive extents and product(shape) == size().
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<float>> rows);
  static Tensor from_values(std::initializer_list<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  const float* data() const noexcept { return data_.data(); }
  float* data() noexcept { return data_.data(); }
  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }

  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  // Matrix view: leading axes flattened into rows, last axis is columns.
  std::size_t rows() const;
  std::size_t cols() const;
  std::span<const float> row(std::size_t r) const;
  std::span<float> row(std::size_t r);
  float at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  float& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const noexcept;

  /// Bitwise equality of shape and payload (distinguishes -0.0 from 0.0).
  bool bit_equal(const Tensor& other) const noexcept;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace vvlab
