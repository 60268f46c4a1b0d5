#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "salgan/diffcore/adam.hpp"
#include "salgan/models/comparator.hpp"
#include "salgan/models/generator.hpp"
#include "salgan/pairing/pairing.hpp"
#include "salgan/training/reward.hpp"
#include "salgan/training/rollout.hpp"

SALGAN_NAMESPACE_BEGIN
namespace training {

enum class Phase { Mle, Disc, Gen, Eval };
const char* phase_name(Phase p);

/// One row of the metrics log; unset fields are written empty.
struct MetricsRecord {
  std::int64_t iter = 0;
  Phase phase = Phase::Disc;
  std::optional<double> d_loss, mean_reward, nll_oracle, nll_gen, w_better, w_worse, seconds;
  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

std::string metrics_csv_header();
/// Shortest round-trip decimal for every number.
std::string metrics_csv_row(const MetricsRecord& r);
std::string format_number(double v);

enum class Variant { Sal, Cal, BinarySelf, NoTie, NoSchedule, NoReplay };
const char* variant_name(Variant v);
/// ConfigError naming the accepted variants otherwise.
Variant parse_variant(std::string_view name);

enum class ReplayGranularity { Round, Step };
const char* granularity_name(ReplayGranularity g);
ReplayGranularity parse_granularity(std::string_view name);

struct TrainConfig {
  std::size_t disc_steps = 5;  // k
  std::size_t gen_steps = 1;   // g
  std::size_t rollouts = 16;   // N
  std::size_t references = 1;  // m
  std::size_t batch = 64;
  std::size_t rounds = 100;
  std::size_t memory = 5;  // K
  std::size_t seq_len = 20;
  Variant variant = Variant::Sal;
  ReplayGranularity granularity = ReplayGranularity::Round;
  double gen_lr = 1e-4;
  double disc_lr = 1e-4;
  double dropout_keep = 0.75;
  double l2 = 0.2;
  /// Share of Better/Worse slots filled from checkpoint pairs during the
  /// first half of training; decays linearly to 0 over the second half.
  double checkpoint_share = 0.25;
  RewardSchedule schedule;
  /// 0 disables periodic evaluation; round 0 and the last round always run.
  std::size_t eval_every = 10;
  std::uint64_t seed = 0;

  void validate() const;
  /// Memory capacity after variant adjustments (no-replay keeps one phase).
  std::size_t effective_memory() const;
  std::size_t comparator_classes() const;
  std::size_t disc_batch() const;
};

/// Quality of a generator snapshot. `score` is lower-is-better and drives
/// best-model selection.
struct Evaluation {
  std::optional<double> nll_oracle;
  std::optional<double> nll_gen;
  double score = 0.0;
};
using Evaluator = std::function<Evaluation(const GeneratorParams&)>;

struct PretrainConfig {
  std::size_t epochs = 120;
  std::size_t batch = 64;
  double lr = 1e-2;
  std::vector<double> snapshots{0.2, 1.0};
  std::size_t eval_every = 0;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  GeneratorParams generator;
  /// (fraction, parameters) in the order requested.
  std::vector<std::pair<double, GeneratorParams>> snapshots;
  std::vector<MetricsRecord> log;
  diff::AdamState adam;
};

/// Mini-batch Adam on teacher-forced mean per-token NLL. Batches of unequal
/// length sequences are split by length.
PretrainResult mle_pretrain(GeneratorParams gen, std::span<const TokenSequence> data,
                            const PretrainConfig& config, const Evaluator& evaluate = {});

/// Mean teacher-forced NLL over `data` on the training path.
double training_nll(const GeneratorParams& gen, std::span<const TokenSequence> data);

/// One Adam update on the mean pair cross-entropy plus classifier L2.
/// Returns the cross-entropy before the update.
double discriminator_step(models::ComparatorParams& d, diff::AdamState& adam,
                          std::span<const pairing::LabeledPair> batch, double dropout_keep,
                          double l2, Rng& rng);

/// Real samples labeled 1, generated 0.
double binary_discriminator_step(models::BinaryDiscParams& d, diff::AdamState& adam,
                                 std::span<const TokenSequence* const> real,
                                 std::span<const TokenSequence* const> generated,
                                 double dropout_keep, double l2, Rng& rng);

/// Fraction of cross pairs (Better/Worse) whose argmax matches the label.
double pair_accuracy(const models::ComparatorParams& d, std::span<const pairing::LabeledPair> pairs);

struct TrainData {
  std::span<const TokenSequence> real;
  /// Late and early MLE checkpoint samples; empty disables checkpoint pairs.
  std::vector<TokenSequence> pseudo_real;
  std::vector<TokenSequence> fake;
};

/// Reference provenance for one generator step.
struct ReplayRecord {
  std::int64_t iter = 0;
  std::int64_t gen_phase = 0;
  std::optional<std::int64_t> ref_tag_min, ref_tag_max;
};

std::string replay_csv_header();
std::string replay_csv_row(const ReplayRecord& r);

struct TrainResult {
  GeneratorParams final_generator;
  GeneratorParams best_generator;
  Evaluation best;
  Evaluation initial;
  std::int64_t best_round = 0;
  std::vector<MetricsRecord> log;
  std::vector<ReplayRecord> replay;
  std::optional<models::ComparatorParams> comparator;
  std::optional<models::BinaryDiscParams> binary;
  diff::AdamState gen_adam;
  diff::AdamState disc_adam;
  /// Rounds completed and total step records logged.
  std::size_t rounds_done = 0;
  std::int64_t steps_done = 0;
};

/// Progress hook called after every logged record.
using ProgressFn = std::function<void(const MetricsRecord&)>;

/// Rounds of k discriminator steps then g generator steps, dispatching on
/// config.variant. The log holds rounds * (k + g) step records plus eval rows.
TrainResult sal_train(const TrainConfig& config, GeneratorParams gen,
                      const models::EncoderDims& disc_dims, const TrainData& data,
                      const Evaluator& evaluate, const ProgressFn& progress = {});
TrainResult variant_train(const TrainConfig& config, GeneratorParams gen,
                          const models::EncoderDims& disc_dims, const TrainData& data,
                          const Evaluator& evaluate, const ProgressFn& progress = {});

/// Checkpoint-pair share at a 1-based round of `rounds`.
double checkpoint_share_at(double share, std::size_t round, std::size_t rounds);

}  // namespace training
SALGAN_NAMESPACE_END
