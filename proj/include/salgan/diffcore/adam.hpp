#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "salgan/diffcore/array.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter moments plus the shared step counter. Moments are created
/// on the first update with the shapes of the parameters they track.
struct AdamState {
  AdamConfig config;
  std::vector<DenseArray> first_moment;
  std::vector<DenseArray> second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(AdamConfig c) : config(c) {}
  void reset() {
    first_moment.clear();
    second_moment.clear();
    step = 0;
  }
};

/// One bias-corrected Adam update. Coordinates whose gradient is exactly zero
/// are skipped entirely (value and moments untouched), so a zero gradient
/// never moves a parameter.
void adam_step(std::span<DenseArray* const> params, std::span<const DenseArray> grads,
               AdamState& state);

}  // namespace diff
SALGAN_NAMESPACE_END
