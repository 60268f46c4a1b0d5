#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "salgan/models/comparator.hpp"
#include "salgan/models/sequence.hpp"
#include "salgan/rng.hpp"

SALGAN_NAMESPACE_BEGIN
namespace pairing {

using ComparisonLabel = models::PairClass;

/// Where a sample came from; the four sets never overlap.
enum class Provenance { Real, Generated, PseudoReal, Fake };

const char* provenance_name(Provenance p);

struct SampleRef {
  Provenance provenance = Provenance::Real;
  std::size_t index = 0;
  /// Generator phase that produced a Generated sample, -1 otherwise.
  std::int64_t tag = -1;
};

/// Non-owning: the sequences live in the PairSource inputs.
struct LabeledPair {
  const TokenSequence* first = nullptr;
  const TokenSequence* second = nullptr;
  ComparisonLabel label = ComparisonLabel::Tie;
  SampleRef first_ref, second_ref;
};

struct TaggedSample {
  const TokenSequence* sequence = nullptr;
  std::int64_t tag = 0;
};

struct PairSource {
  std::vector<const TokenSequence*> real;
  std::vector<TaggedSample> generated;
  std::vector<const TokenSequence*> pseudo_real;
  std::vector<const TokenSequence*> fake;
};

/// Every cross pair in both orders plus one Tie per same-provenance pair.
std::vector<LabeledPair> build_pairs(std::span<const TokenSequence> real,
                                     std::span<const TokenSequence> generated);

struct PairCounts {
  std::size_t unordered = 0;  // C(n_real + n_gen, 2)
  std::size_t ordered = 0;    // emitted instances: 2 n_real n_gen + C(n_real,2) + C(n_gen,2)
};

PairCounts available_pair_counts(std::size_t n_real, std::size_t n_generated);

/// late[i] paired with early[i] for i < min(|late|, |early|), both orders.
std::vector<LabeledPair> checkpoint_pairs(std::span<const TokenSequence> late,
                                          std::span<const TokenSequence> early);

struct BatchMix {
  enum class Mode { Strict, UniformRandom };
  Mode mode = Mode::Strict;
  /// False for the two-class comparator.
  bool ties = true;
  /// Fraction of Better/Worse draws taken from checkpoint pairs.
  double checkpoint_share = 0.0;
};

/// Strict mode: batch_size / classes draws per class; every Better pair's
/// swap is the matching Worse pair; Tie pairs split between (real, real) and
/// (gen, gen). Throws ConfigError naming any requested class with no source.
std::vector<LabeledPair> sample_pair_batch(const PairSource& source, std::size_t batch_size,
                                           Rng& rng, const BatchMix& mix = {});

}  // namespace pairing
SALGAN_NAMESPACE_END
