#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "salgan/diffcore/adam.hpp"
#include "salgan/models/comparator.hpp"
#include "salgan/models/generator.hpp"
#include "salgan/training/memory.hpp"
#include "salgan/training/reward.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

using models::GeneratorParams;

/// Scores a complete generated sample against a reference, both given as
/// encoder features. Implementations are read-only and thread-safe.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t feature_size() const = 0;
  virtual void features(const TokenSequence& seq, std::span<Real> out) const = 0;
  virtual double score(std::span<const Real> sample, std::span<const Real> reference) const = 0;
};

/// gamma from the comparative discriminator under fixed weights.
class ComparatorScorer final : public Scorer {
 public:
  ComparatorScorer(const models::ComparatorParams& d, RewardWeights w);
  std::size_t feature_size() const override;
  void features(const TokenSequence& seq, std::span<Real> out) const override;
  double score(std::span<const Real> sample, std::span<const Real> reference) const override;

 private:
  const models::ComparatorParams& d_;
  models::EncoderCache cache_;
  RewardWeights w_;
};

/// D(x_g) - D(x_r) from a binary real/fake discriminator.
class BinaryScorer final : public Scorer {
 public:
  explicit BinaryScorer(const models::BinaryDiscParams& d);
  std::size_t feature_size() const override;
  void features(const TokenSequence& seq, std::span<Real> out) const override;
  double score(std::span<const Real> sample, std::span<const Real> reference) const override;

 private:
  const models::BinaryDiscParams& d_;
  models::EncoderCache cache_;
};

struct RolloutSettings {
  std::size_t rollouts = 16;   // N
  std::size_t references = 1;  // m
  std::size_t seq_len = 20;    // T
};

/// Per-timestep rewards Q(Y_{1:t-1}, y_t) for a batch, plus the tag range of
/// the references that were drawn.
struct RewardEstimate {
  std::vector<std::vector<double>> per_step;  // batch x T
  std::int64_t min_tag = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_tag = std::numeric_limits<std::int64_t>::min();
  double mean() const;
};

/// Rollout completions for (b, t, n) use substream(master, {keys..., b, t, n}),
/// so the estimate is independent of the worker count. At t = T no
/// completion is sampled and only the N m references are drawn.
RewardEstimate estimate_rewards(const GeneratorParams& gen, const Scorer& scorer,
                                std::span<const TokenSequence> batch,
                                std::span<const TaggedSample> references,
                                const RolloutSettings& settings, std::uint64_t master,
                                std::span<const std::uint64_t> keys);

/// Expected reward of choosing the last token of `prefix`: mean over N
/// completions and m references each. StateError on an empty memory.
double rollout_reward(const GeneratorParams& gen, const Scorer& scorer, const TokenSequence& prefix,
                      const MemoryBuffer& memory, const RolloutSettings& settings, Rng& rng);
double rollout_reward(const GeneratorParams& gen, const models::ComparatorParams& d,
                      const TokenSequence& prefix, const MemoryBuffer& memory,
                      const RewardWeights& w, const RolloutSettings& settings, Rng& rng);

/// Gradient of -(1/B) sum_{b,t} R[b][t] log G(y_t | y_<t), ordered as
/// GeneratorParams::arrays().
std::vector<diff::DenseArray> policy_gradient(const GeneratorParams& gen,
                                              std::span<const TokenSequence> batch,
                                              const std::vector<std::vector<double>>& rewards);

struct GeneratorStepResult {
  double mean_reward = 0;
  std::int64_t min_tag = 0;
  std::int64_t max_tag = 0;
};

/// Samples batch_size sequences, estimates rewards, and applies one Adam
/// update along the REINFORCE gradient.
GeneratorStepResult generator_step(GeneratorParams& gen, diff::AdamState& adam,
                                   const Scorer& scorer, std::span<const TaggedSample> references,
                                   const RolloutSettings& settings, std::size_t batch_size,
                                   std::uint64_t master, std::span<const std::uint64_t> keys);

/// `count` sequences from substream(master, {keys..., i}).
std::vector<TokenSequence> sample_batch(const GeneratorParams& gen, std::size_t seq_len,
                                        std::size_t count, std::uint64_t master,
                                        std::span<const std::uint64_t> keys);

}  // namespace training
SALGAN_NAMESPACE_END
