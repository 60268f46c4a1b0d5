#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "salgan/metrics/metrics.hpp"
#include "salgan/models/comparator.hpp"
#include "salgan/training/loop.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

/// Every setting of one experiment. Each field has a default; the file form
/// is one flat JSON object with dotted keys.
struct ExperimentConfig {
  std::string mode = "synthetic";  // synthetic | corpus
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";

  struct Oracle {
    std::uint64_t seed = 1234;
    std::size_t embed = 32;
    std::size_t hidden = 32;
    friend bool operator==(const Oracle&, const Oracle&) = default;
  } oracle;

  struct Model {
    std::size_t vocab = 5000;
    std::size_t embed = 32;
    std::size_t hidden = 32;
    std::size_t seq_len = 20;
    double init_scale = 0.1;
    friend bool operator==(const Model&, const Model&) = default;
  } model;

  struct Data {
    std::size_t n_train = 10000;
    std::size_t n_test = 10000;
    std::uint64_t seed = 4321;
    std::string train_corpus;
    std::string test_corpus;
    friend bool operator==(const Data&, const Data&) = default;
  } data;

  struct Disc {
    std::size_t embed = 64;
    std::vector<std::size_t> widths{2, 3};
    std::vector<std::size_t> counts{100, 200};
    double dropout_keep = 0.75;
    double l2 = 0.2;
    friend bool operator==(const Disc&, const Disc&) = default;
  } disc;

  struct Pretrain {
    std::size_t epochs = 120;
    std::size_t batch = 64;
    double lr = 1e-2;
    double early_snapshot = 0.2;
    std::size_t eval_every = 10;
    friend bool operator==(const Pretrain&, const Pretrain&) = default;
  } pretrain;

  struct Train {
    std::size_t k = 5;
    std::size_t g = 1;
    std::size_t rollouts = 16;
    std::size_t references = 1;
    std::size_t batch = 64;
    std::size_t rounds = 100;
    std::size_t memory = 5;
    std::string variant = "sal";
    std::string granularity = "round";
    double gen_lr = 1e-4;
    double disc_lr = 1e-4;
    double checkpoint_share = 0.25;
    std::size_t checkpoint_samples = 256;
    std::size_t eval_every = 10;
    friend bool operator==(const Train&, const Train&) = default;
  } train;

  struct Reward {
    double w_better_start = 1.0;
    double w_worse_start = -0.1;
    double w_tie = 0.0;
    double w_better_end = 0.8;
    double w_worse_end = -0.2;
    friend bool operator==(const Reward&, const Reward&) = default;
  } reward;

  struct Metrics {
    /// 0 means the test-set size.
    std::size_t sample_count = 0;
    std::uint64_t eval_seed = 777;
    double bleu_epsilon = 1e-9;
    friend bool operator==(const Metrics&, const Metrics&) = default;
  } metrics;

  /// ConfigError on any out-of-range or inconsistent value.
  void validate() const;
  bool synthetic() const { return mode == "synthetic"; }
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// ConfigError on malformed JSON, unknown keys, or wrong value types.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical form: every key, fixed order, one per line.
std::string serialize_config(const ExperimentConfig& config);

/// Applies `key=value`, the value parsed as JSON or else taken as a string.
void apply_override(ExperimentConfig& config, std::string_view assignment);

/// Hash of the settings that fix parameter shapes and data, in hex.
std::string config_fingerprint(const ExperimentConfig& config);

std::vector<std::string> config_keys();

training::TrainConfig train_config(const ExperimentConfig& config);
training::PretrainConfig pretrain_config(const ExperimentConfig& config);
models::GeneratorDims generator_dims(const ExperimentConfig& config);
models::EncoderDims encoder_dims(const ExperimentConfig& config);

}  // namespace cli
SALGAN_NAMESPACE_END
