#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "salgan/cli/config.hpp"
#include "salgan/metrics/metrics.hpp"
#include "salgan/oracle/oracle.hpp"
#include "salgan/training/loop.hpp"

SALGAN_NAMESPACE_BEGIN
namespace cli {

/// Data, oracle or evaluator model, and evaluation for one config. The run
/// seed drives generator initialization, pretraining, and adversarial
/// training; the oracle and the data depend only on their own seeds.
class Experiment {
 public:
  /// Synthetic mode builds the oracle and samples the dataset.
  explicit Experiment(ExperimentConfig config);
  /// Corpus mode: encoded train and test sets plus the frozen evaluator.
  Experiment(ExperimentConfig config, std::vector<TokenSequence> train,
             std::vector<TokenSequence> test, models::GeneratorParams evaluator);

  const ExperimentConfig& config() const { return config_; }
  std::span<const TokenSequence> train_set() const { return train_; }
  std::span<const TokenSequence> test_set() const { return test_; }
  const oracle::OracleModel* oracle() const { return oracle_ ? &*oracle_ : nullptr; }
  const models::GeneratorParams& embedder() const;

  /// Lower score is better: NLL_oracle of samples in synthetic mode, the
  /// evaluator NLL of samples in corpus mode.
  training::Evaluation evaluate(const models::GeneratorParams& gen) const;
  metrics::EvalReport report(const models::GeneratorParams& gen) const;
  metrics::EvalContext eval_context() const;

  models::GeneratorParams initial_generator(std::uint64_t seed) const;
  training::PretrainResult pretrain(std::uint64_t seed) const;
  /// Checkpoint sample sets drawn from the early and final pretraining snapshots.
  training::TrainData train_data(const training::PretrainResult& pretrained, std::uint64_t seed) const;
  training::TrainResult train(const training::TrainConfig& tc, const training::PretrainResult& pretrained,
                              const training::ProgressFn& progress = {}) const;

 private:
  ExperimentConfig config_;
  std::optional<oracle::OracleModel> oracle_;
  std::optional<models::GeneratorParams> evaluator_;
  std::vector<TokenSequence> train_, test_;
};

/// MLE-trained frozen LSTM over held-out text, used as the corpus-mode embedder.
models::GeneratorParams train_evaluator(const ExperimentConfig& config,
                                        std::span<const TokenSequence> heldout);

}  // namespace cli
SALGAN_NAMESPACE_END
