#pragma once

#include <functional>
#include <vector>

#include "salgan/diffcore/array.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

using ScalarFn = std::function<double(const std::vector<DenseArray>&)>;
using GradientFn = std::function<std::vector<DenseArray>(const std::vector<DenseArray>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Compares `gradient(params)` with central differences of `value` at every
/// coordinate. The per-coordinate error is
/// |analytic - numeric| / (|analytic| + |numeric| + floor).
GradCheckResult finite_difference_check(const ScalarFn& value, const GradientFn& gradient,
                                        const std::vector<DenseArray>& params, double step,
                                        double tolerance, double floor = 1e-6);

}  // namespace diff
SALGAN_NAMESPACE_END
