#include "salgan/diffcore/adam.hpp"

#include <cmath>
#include <string>

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

void adam_step(std::span<DenseArray* const> params, std::span<const DenseArray> grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    require_same_shape(*params[i], grads[i], "adam_step");

  if (state.first_moment.empty()) {
    for (const DenseArray* p : params) {
      state.first_moment.push_back(DenseArray::zeros_like(*p));
      state.second_moment.push_back(DenseArray::zeros_like(*p));
    }
  }
  if (state.first_moment.size() != params.size())
    throw ShapeError("adam_step: optimizer state tracks a different parameter set");
  for (std::size_t i = 0; i < params.size(); ++i)
    require_same_shape(*params[i], state.first_moment[i], "adam_step state");

  state.step += 1;
  const auto& c = state.config;
  const double correct1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correct2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    DenseArray& p = *params[i];
    const DenseArray& g = grads[i];
    DenseArray& m = state.first_moment[i];
    DenseArray& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = g[j];
      if (gj == 0.0) continue;
      const double mj = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
      const double vj = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double update = c.learning_rate * (mj / correct1) / (std::sqrt(vj / correct2) + c.epsilon);
      p[j] = static_cast<Real>(p[j] - update);
    }
  }
}

}  // namespace diff
SALGAN_NAMESPACE_END
