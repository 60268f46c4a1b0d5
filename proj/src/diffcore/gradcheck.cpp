#include "salgan/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

GradCheckResult finite_difference_check(const ScalarFn& value, const GradientFn& gradient,
                                        const std::vector<DenseArray>& params, double step,
                                        double tolerance, double floor) {
  if (step <= 0) throw UsageError("finite_difference_check needs a positive step");
  const std::vector<DenseArray> analytic = gradient(params);
  if (analytic.size() != params.size())
    throw ShapeError("gradient function returned the wrong number of arrays");

  std::vector<DenseArray> probe = params;
  double worst = 0.0;
  for (std::size_t a = 0; a < probe.size(); ++a) {
    require_same_shape(probe[a], analytic[a], "finite_difference_check");
    for (std::size_t i = 0; i < probe[a].size(); ++i) {
      const Real saved = probe[a][i];
      probe[a][i] = static_cast<Real>(saved + step);
      const double up = value(probe);
      probe[a][i] = static_cast<Real>(saved - step);
      const double down = value(probe);
      probe[a][i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[a][i];
      const double err = std::abs(exact - numeric) / (std::abs(exact) + std::abs(numeric) + floor);
      worst = std::max(worst, err);
    }
  }
  return {worst, worst < tolerance};
}

}  // namespace diff
SALGAN_NAMESPACE_END
