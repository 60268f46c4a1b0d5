#include "salgan/diffcore/array.hpp"

#include <cmath>
#include <numeric>

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

namespace {

std::size_t element_count(const Shape& shape) {
  if (shape.empty()) throw ShapeError("shape must have at least one dimension");
  std::size_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw ShapeError("zero-sized dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

DenseArray::DenseArray(Shape shape, Real fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

DenseArray::DenseArray(Shape shape, std::vector<Real> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " holds " +
                     std::to_string(element_count(shape_)) + " elements, got " +
                     std::to_string(data_.size()));
  }
}

DenseArray DenseArray::row(std::vector<Real> v) {
  const std::size_t n = v.size();
  return DenseArray({1, n}, std::move(v));
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols, std::vector<Real> data) {
  return DenseArray({rows, cols}, std::move(data));
}

std::size_t DenseArray::rows() const {
  if (shape_.size() <= 1) return shape_.empty() ? 0 : 1;
  return data_.size() / shape_.back();
}

void DenseArray::reshape(Shape shape) {
  if (element_count(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

bool DenseArray::all_finite() const {
  for (Real v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_same_shape(const DenseArray& a, const DenseArray& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

}  // namespace diff
SALGAN_NAMESPACE_END
