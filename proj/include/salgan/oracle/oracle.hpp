#pragma once

#include <cstdint>
#include <vector>

#include "salgan/models/generator.hpp"

SALGAN_NAMESPACE_BEGIN
namespace oracle {

using models::GeneratorParams;

/// Frozen, randomly initialized LSTM standing in for the true data
/// distribution of the synthetic task.
class OracleModel {
 public:
  OracleModel(GeneratorParams params, std::uint64_t seed, std::size_t seq_len)
      : params_(std::move(params)), seed_(seed), seq_len_(seq_len) {}

  const GeneratorParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t vocab() const { return params_.dims.vocab; }
  std::size_t seq_len() const { return seq_len_; }

 private:
  GeneratorParams params_;
  std::uint64_t seed_;
  std::size_t seq_len_;
};

struct SyntheticDataset {
  std::vector<TokenSequence> train;
  std::vector<TokenSequence> test;
};

OracleModel make_oracle(std::uint64_t seed, std::size_t vocab, std::size_t seq_len,
                        std::size_t embed, std::size_t hidden);

/// `count` ancestral samples; sample i uses the stream (seed, stream, i).
std::vector<TokenSequence> sample_corpus(const GeneratorParams& params, std::size_t seq_len,
                                         std::size_t count, std::uint64_t seed,
                                         std::uint64_t stream);

/// Train and test sets come from disjoint sub-streams of `seed`.
SyntheticDataset generate_dataset(const OracleModel& oracle, std::size_t n_train,
                                  std::size_t n_test, std::uint64_t seed);

/// Mean of sequence_nll under the oracle, nats per token.
double nll_oracle(const OracleModel& oracle, std::span<const TokenSequence> generated);

/// Mean of sequence_nll of the held-out test set under `generator`.
double nll_gen(const GeneratorParams& generator, const SyntheticDataset& dataset);

/// Mean per-token NLL of `samples` under `params`; shared by both metrics.
double mean_nll(const GeneratorParams& params, std::span<const TokenSequence> samples);

}  // namespace oracle
SALGAN_NAMESPACE_END
