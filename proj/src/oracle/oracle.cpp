#include "salgan/oracle/oracle.hpp"

#include "salgan/errors.hpp"
#include "salgan/parallel.hpp"

SALGAN_NAMESPACE_BEGIN
namespace oracle {

namespace {
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;
}  // namespace

OracleModel make_oracle(std::uint64_t seed, std::size_t vocab, std::size_t seq_len,
                        std::size_t embed, std::size_t hidden) {
  if (vocab < 2) throw UsageError("oracle needs a vocabulary of at least 2 tokens");
  if (seq_len < 1) throw UsageError("oracle needs sequence length >= 1");
  Rng rng = substream(seed, {0x6f7261636c65ULL});
  return OracleModel(models::normal_generator({vocab, embed, hidden}, rng), seed, seq_len);
}

std::vector<TokenSequence> sample_corpus(const GeneratorParams& params, std::size_t seq_len,
                                         std::size_t count, std::uint64_t seed,
                                         std::uint64_t stream) {
  std::vector<TokenSequence> out(count);
  parallel_for(count, [&](std::size_t i) {
    Rng rng = substream(seed, {stream, i});
    out[i] = models::sample_sequence(params, seq_len, rng).sequence;
  });
  return out;
}

SyntheticDataset generate_dataset(const OracleModel& oracle, std::size_t n_train,
                                  std::size_t n_test, std::uint64_t seed) {
  if (n_train < 1 || n_test < 1) throw UsageError("dataset sizes must be at least 1");
  return {sample_corpus(oracle.params(), oracle.seq_len(), n_train, seed, kTrainStream),
          sample_corpus(oracle.params(), oracle.seq_len(), n_test, seed, kTestStream)};
}

double mean_nll(const GeneratorParams& params, std::span<const TokenSequence> samples) {
  if (samples.empty()) throw UsageError("NLL of an empty sample list");
  std::vector<double> per(samples.size());
  parallel_for(samples.size(),
               [&](std::size_t i) { per[i] = models::sequence_nll(params, samples[i]); });
  double total = 0.0;
  for (double v : per) total += v;
  return total / static_cast<double>(samples.size());
}

double nll_oracle(const OracleModel& oracle, std::span<const TokenSequence> generated) {
  return mean_nll(oracle.params(), generated);
}

double nll_gen(const GeneratorParams& generator, const SyntheticDataset& dataset) {
  return mean_nll(generator, dataset.test);
}

}  // namespace oracle
SALGAN_NAMESPACE_END
