#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lffpe {

using Shape = std::vector<std::size_t>;

/// Thrown whenever operand shapes do not line up.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_to_string(const Shape &shape);
std::size_t shape_volume(const Shape &shape);

/**
 * Dense row-major tensor of 64-bit floats.
 *
 * A plain value type: copies are deep, and nothing is shared between
 * instances. The product of the shape always equals the element count.
 */
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// Builds a 2-D tensor from nested rows. All rows must share a length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor identity(std::size_t n);

  [[nodiscard]] const Shape &shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t dim(std::size_t axis) const;
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] const std::vector<double> &values() const noexcept { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double &at(std::size_t i, std::size_t j);
  [[nodiscard]] double at(std::size_t i, std::size_t j) const;
  double &at(std::size_t i, std::size_t j, std::size_t k);
  [[nodiscard]] double at(std::size_t i, std::size_t j, std::size_t k) const;

  /// Contiguous slice along the last axis, addressed by the flattened
  /// index over all leading axes.
  [[nodiscard]] std::span<double> row(std::size_t r);
  [[nodiscard]] std::span<const double> row(std::size_t r) const;
  [[nodiscard]] std::size_t rows() const;
  [[nodiscard]] std::size_t cols() const;

  /// Same data, new shape. Volumes must agree.
  [[nodiscard]] Tensor reshaped(Shape shape) const;

  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Tensor &, const Tensor &) = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(const Tensor &a, const Tensor &b);
Tensor operator-(const Tensor &a, const Tensor &b);
Tensor operator*(double s, const Tensor &a);

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
double max_abs_diff(const Tensor &a, const Tensor &b);

/// Throws if any entry is NaN or infinite; `what` names the producer.
void require_finite(const Tensor &t, const char *what);

} // namespace lffpe
