#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace beamsel::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Images and activations use (rows, cols,
/// channels) order; dense activations are rank 1.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  bool empty() const noexcept { return values_.empty(); }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  // Rank-3 (row, col, channel) accessors.
  double& at(std::size_t r, std::size_t c, std::size_t ch) noexcept {
    return values_[(r * shape_[1] + c) * shape_[2] + ch];
  }
  double at(std::size_t r, std::size_t c, std::size_t ch) const noexcept {
    return values_[(r * shape_[1] + c) * shape_[2] + ch];
  }

  /// Reinterprets the data under a new shape with the same element count.
  void reshape(Shape shape);
  void fill(double value) noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

}  // namespace beamsel::nn
