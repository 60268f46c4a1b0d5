#include "salgan/training/rollout.hpp"

#include <algorithm>

#include "salgan/diffcore/tape.hpp"
#include "salgan/errors.hpp"
#include "salgan/parallel.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

namespace {

constexpr std::uint64_t kSampleKey = 0;
constexpr std::uint64_t kRolloutKey = 1;

struct TagRange {
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  void add(std::int64_t t) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  void merge(const TagRange& o) {
    lo = std::min(lo, o.lo);
    hi = std::max(hi, o.hi);
  }
};

std::vector<Real> reference_features(const Scorer& scorer, std::span<const TaggedSample> refs) {
  const std::size_t f = scorer.feature_size();
  std::vector<Real> out(refs.size() * f);
  parallel_for(refs.size(), [&](std::size_t i) {
    scorer.features(*refs[i].sequence, std::span<Real>(out.data() + i * f, f));
  });
  return out;
}

// Mean reward of `prefix` over N completions and m references each.
// `state` is the LSTM state after consuming every prefix token but the last.
// rng_for(n) yields the stream for completion n.
template <typename RngFor>
double rollout_value(models::LstmRunner& runner, const Scorer& scorer,
                     std::span<const TokenId> prefix, const models::LstmState& state,
                     const RolloutSettings& s, std::span<const TaggedSample> refs,
                     const std::vector<Real>& ref_features, RngFor&& rng_for, TagRange& tags) {
  const std::size_t f = scorer.feature_size(), t = prefix.size();
  std::vector<Real> feat(f);
  TokenSequence completion(std::vector<TokenId>(prefix.begin(), prefix.end()));
  const bool complete = t >= s.seq_len;
  if (complete) scorer.features(completion, feat);
  double total = 0.0;
  for (std::size_t n = 0; n < s.rollouts; ++n) {
    Rng& rng = rng_for(n);
    if (!complete) {
      completion.ids.resize(t);
      runner.rollout(prefix.back(), state, s.seq_len - t, rng, completion.ids);
      scorer.features(completion, feat);
    }
    for (std::size_t j = 0; j < s.references; ++j) {
      const std::size_t r = std::uniform_int_distribution<std::size_t>(0, refs.size() - 1)(rng);
      tags.add(refs[r].tag);
      total += scorer.score(feat, std::span<const Real>(ref_features.data() + r * f, f));
    }
  }
  return total / static_cast<double>(s.rollouts * s.references);
}

void check_settings(const RolloutSettings& s) {
  if (s.rollouts == 0 || s.references == 0 || s.seq_len == 0)
    throw ConfigError("rollout count, reference count, and sequence length must be positive");
}

}  // namespace

ComparatorScorer::ComparatorScorer(const models::ComparatorParams& d, RewardWeights w)
    : d_(d), cache_(d.encoder), w_(w) {}

std::size_t ComparatorScorer::feature_size() const { return d_.encoder.dims.feature_size(); }

void ComparatorScorer::features(const TokenSequence& seq, std::span<Real> out) const {
  cache_.encode_into(seq, out);
}

double ComparatorScorer::score(std::span<const Real> sample, std::span<const Real> ref) const {
  return reward(models::compare_features(d_, sample, ref), w_);
}

BinaryScorer::BinaryScorer(const models::BinaryDiscParams& d) : d_(d), cache_(d.encoder) {}

std::size_t BinaryScorer::feature_size() const { return d_.encoder.dims.feature_size(); }

void BinaryScorer::features(const TokenSequence& seq, std::span<Real> out) const {
  cache_.encode_into(seq, out);
}

double BinaryScorer::score(std::span<const Real> sample, std::span<const Real> ref) const {
  return static_cast<double>(models::binary_from_features(d_, sample)) -
         static_cast<double>(models::binary_from_features(d_, ref));
}

double RewardEstimate::mean() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& row : per_step)
    for (double r : row) {
      total += r;
      ++n;
    }
  return n ? total / static_cast<double>(n) : 0.0;
}

RewardEstimate estimate_rewards(const GeneratorParams& gen, const Scorer& scorer,
                                std::span<const TokenSequence> batch,
                                std::span<const TaggedSample> refs, const RolloutSettings& s,
                                std::uint64_t master, std::span<const std::uint64_t> keys) {
  check_settings(s);
  if (refs.empty()) throw StateError("no reference samples available for rollout rewards");
  const std::size_t B = batch.size(), T = s.seq_len;
  for (const auto& seq : batch)
    if (seq.size() != T)
      throw ShapeError("rollout batch sequences must have length " + std::to_string(T));
  const std::vector<Real> ref_feat = reference_features(scorer, refs);

  RewardEstimate out;
  out.per_step.assign(B, std::vector<double>(T, 0.0));
  std::vector<TagRange> ranges(B * T);
  parallel_for(B * T, [&](std::size_t task) {
    const std::size_t b = task / T, t = task % T + 1;
    models::LstmRunner runner(gen);
    models::LstmState state = models::initial_state(gen.dims);
    std::vector<Real> probs(gen.dims.vocab);
    TokenId last = kStartToken;
    for (std::size_t i = 0; i + 1 < t; ++i) {
      runner.step(last, state, probs);
      last = batch[b][i];
    }
    if (t > 1) runner.step(last, state, probs);
    std::vector<std::uint64_t> k = extend_keys(keys, {kRolloutKey, b, t, 0});
    Rng rng;
    auto rng_for = [&](std::size_t n) -> Rng& {
      k.back() = n;
      rng = substream(master, k);
      return rng;
    };
    const std::span<const TokenId> prefix(batch[b].ids.data(), t);
    out.per_step[b][t - 1] =
        rollout_value(runner, scorer, prefix, state, s, refs, ref_feat, rng_for, ranges[task]);
  });
  TagRange all;
  for (const auto& r : ranges) all.merge(r);
  out.min_tag = all.lo;
  out.max_tag = all.hi;
  return out;
}

double rollout_reward(const GeneratorParams& gen, const Scorer& scorer, const TokenSequence& prefix,
                      const MemoryBuffer& memory, const RolloutSettings& s, Rng& rng) {
  check_settings(s);
  if (memory.empty()) throw StateError("rollout_reward needs a nonempty memory buffer");
  if (prefix.empty() || prefix.size() > s.seq_len)
    throw UsageError("rollout prefix length must lie in [1, T]");
  const std::vector<TaggedSample> refs = memory.samples();
  const std::vector<Real> ref_feat = reference_features(scorer, refs);
  models::LstmRunner runner(gen);
  models::LstmState state = models::initial_state(gen.dims);
  std::vector<Real> probs(gen.dims.vocab);
  TokenId last = kStartToken;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i + 1 == prefix.size()) break;
    runner.step(last, state, probs);
    last = prefix[i];
  }
  if (prefix.size() > 1) runner.step(last, state, probs);
  TagRange tags;
  return rollout_value(runner, scorer, prefix.ids, state, s, refs, ref_feat,
                       [&](std::size_t) -> Rng& { return rng; }, tags);
}

double rollout_reward(const GeneratorParams& gen, const models::ComparatorParams& d,
                      const TokenSequence& prefix, const MemoryBuffer& memory,
                      const RewardWeights& w, const RolloutSettings& s, Rng& rng) {
  return rollout_reward(gen, ComparatorScorer(d, w), prefix, memory, s, rng);
}

std::vector<diff::DenseArray> policy_gradient(const GeneratorParams& gen,
                                              std::span<const TokenSequence> batch,
                                              const std::vector<std::vector<double>>& rewards) {
  if (batch.empty()) throw UsageError("policy_gradient of an empty batch");
  if (rewards.size() != batch.size()) throw ShapeError("one reward row per sequence required");
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<std::vector<Real>> w(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (double r : rewards[b]) w[b].push_back(static_cast<Real>(r * inv));
  diff::Tape tape;
  models::TapedGenerator g = models::bind(tape, gen);
  const diff::NodeId loss = models::weighted_sequence_nll(tape, g, gen.dims, batch, w);
  return models::collect_gradients(tape.backward(loss), g);
}

std::vector<TokenSequence> sample_batch(const GeneratorParams& gen, std::size_t seq_len,
                                        std::size_t count, std::uint64_t master,
                                        std::span<const std::uint64_t> keys) {
  std::vector<TokenSequence> out(count);
  parallel_for(count, [&](std::size_t i) {
    Rng rng = substream(master, extend_keys(keys, {i}));
    out[i] = models::sample_sequence(gen, seq_len, rng).sequence;
  });
  return out;
}

GeneratorStepResult generator_step(GeneratorParams& gen, diff::AdamState& adam,
                                   const Scorer& scorer, std::span<const TaggedSample> refs,
                                   const RolloutSettings& s, std::size_t batch_size,
                                   std::uint64_t master, std::span<const std::uint64_t> keys) {
  if (refs.empty()) throw StateError("generator_step needs a nonempty reference pool");
  if (batch_size == 0) throw ConfigError("generator batch size must be positive");
  const std::vector<TokenSequence> batch =
      sample_batch(gen, s.seq_len, batch_size, master, extend_keys(keys, {kSampleKey}));
  const RewardEstimate est = estimate_rewards(gen, scorer, batch, refs, s, master, keys);
  std::vector<diff::DenseArray> grads = policy_gradient(gen, batch, est.per_step);
  auto params = gen.arrays();
  diff::adam_step(params, grads, adam);
  return {est.mean(), est.min_tag, est.max_tag};
}

}  // namespace training
SALGAN_NAMESPACE_END
