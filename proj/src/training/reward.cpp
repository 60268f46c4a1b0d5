#include "salgan/training/reward.hpp"

#include <algorithm>

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

void RewardWeights::validate() const {
  if (!(better > 0.0) || tie != 0.0 || !(worse < 0.0))
    throw ConfigError("reward weights must satisfy w_better > 0 = w_tie > w_worse, got (" +
                      std::to_string(better) + ", " + std::to_string(worse) + ", " +
                      std::to_string(tie) + ")");
}

RewardWeights scheduled_weights(const RewardSchedule& s, std::int64_t iter) {
  if (s.total <= 0 || iter <= 0) return s.start;
  if (iter >= s.total) return s.end;
  const double t = static_cast<double>(iter) / static_cast<double>(s.total);
  auto lerp = [t](double a, double b) { return (1.0 - t) * a + t * b; };
  return {lerp(s.start.better, s.end.better), lerp(s.start.worse, s.end.worse),
          lerp(s.start.tie, s.end.tie)};
}

double reward(const models::Comparison& c, const RewardWeights& w) {
  const double g = w.better * c.better + w.worse * c.worse + w.tie * c.tie;
  return std::clamp(g, std::min(w.worse, w.tie), std::max(w.better, w.tie));
}

double reward(const models::ComparatorParams& d, const TokenSequence& generated,
              const TokenSequence& reference, const RewardWeights& w) {
  return reward(models::compare(d, generated, reference), w);
}

}  // namespace training
SALGAN_NAMESPACE_END
