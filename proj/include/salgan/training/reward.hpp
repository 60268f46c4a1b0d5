#pragma once

#include <cstdint>

#include "salgan/models/comparator.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

/// Credit for each comparison outcome. Invariant: better > 0 = tie > worse.
struct RewardWeights {
  double better = 1.0;
  double worse = -0.1;
  double tie = 0.0;

  /// ConfigError unless the ordering invariant holds.
  void validate() const;
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

/// Linear interpolation from `start` (iteration 0) to `end` (iteration `total`).
struct RewardSchedule {
  RewardWeights start{1.0, -0.1, 0.0};
  RewardWeights end{0.8, -0.2, 0.0};
  std::int64_t total = 1;
};

/// Iterations outside [0, total] are clamped to the endpoints.
RewardWeights scheduled_weights(const RewardSchedule& schedule, std::int64_t iter);

/// w_better p_better + w_worse p_worse + w_tie p_tie, clamped into
/// [w_worse, w_better] against rounding.
double reward(const models::Comparison& c, const RewardWeights& w);
double reward(const models::ComparatorParams& d, const TokenSequence& generated,
              const TokenSequence& reference, const RewardWeights& w);

}  // namespace training
SALGAN_NAMESPACE_END
