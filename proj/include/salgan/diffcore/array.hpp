#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "salgan/real.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array. Rank-1 arrays of length n behave as 1 x n rows in
/// matrix operations; a scalar is shape {1}.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(Shape shape, Real fill = Real(0));
  DenseArray(Shape shape, std::vector<Real> data);

  static DenseArray scalar(Real v) { return DenseArray({1}, {v}); }
  static DenseArray row(std::vector<Real> v);
  static DenseArray matrix(std::size_t rows, std::size_t cols, std::vector<Real> data);
  static DenseArray zeros_like(const DenseArray& a) { return DenseArray(a.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Matrix view: leading dimensions collapse into rows, the last is columns.
  std::size_t rows() const;
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  std::vector<Real>& storage() { return data_; }
  const std::vector<Real>& storage() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<Real> row_span(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const Real> row_span(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }

  void reshape(Shape shape);
  bool all_finite() const;

  friend bool operator==(const DenseArray&, const DenseArray&) = default;

 private:
  Shape shape_;
  std::vector<Real> data_;
};

void require_same_shape(const DenseArray& a, const DenseArray& b, const char* what);

}  // namespace diff
SALGAN_NAMESPACE_END
