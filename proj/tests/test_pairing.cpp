#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "salgan/errors.hpp"
#include "salgan/pairing/pairing.hpp"

using namespace salgan;
using namespace salgan::pairing;
using L = ComparisonLabel;

namespace {

std::vector<TokenSequence> corpus(std::size_t n, TokenId base) {
  std::vector<TokenSequence> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(TokenSequence{base, static_cast<TokenId>(base + i), 5});
  return out;
}

PairSource source(const std::vector<TokenSequence>& real, const std::vector<TokenSequence>& gen,
                  std::int64_t tag = 0) {
  PairSource s;
  for (const auto& x : real) s.real.push_back(&x);
  for (const auto& x : gen) s.generated.push_back({&x, tag});
  return s;
}

std::map<L, std::size_t> histogram(const std::vector<LabeledPair>& pairs) {
  std::map<L, std::size_t> h;
  for (const auto& p : pairs) ++h[p.label];
  return h;
}

bool has_mirror(const std::vector<LabeledPair>& pairs, const LabeledPair& p) {
  for (const auto& q : pairs)
    if (q.label == L::Worse && q.first == p.second && q.second == p.first) return true;
  return false;
}

}  // namespace

TEST(Pairs, UnorderedCountIsChooseTwo) {
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto real = corpus(n, 10), gen = corpus(n, 100);
    const auto pairs = build_pairs(real, gen);
    std::set<std::pair<const TokenSequence*, const TokenSequence*>> unordered;
    for (const auto& p : pairs) unordered.insert(std::minmax(p.first, p.second));
    const std::size_t expected = (2 * n) * (2 * n - 1) / 2;
    EXPECT_EQ(unordered.size(), expected) << n;
    EXPECT_EQ(available_pair_counts(n, n).unordered, expected);
    EXPECT_EQ(available_pair_counts(n, n).ordered, pairs.size());
  }
}

TEST(Pairs, LabelsFollowProvenance) {
  const auto real = corpus(3, 10), gen = corpus(4, 100);
  for (const auto& p : build_pairs(real, gen)) {
    EXPECT_NE(p.first, p.second);
    const bool r1 = p.first_ref.provenance == Provenance::Real;
    const bool r2 = p.second_ref.provenance == Provenance::Real;
    if (r1 && !r2) EXPECT_EQ(p.label, L::Better);
    if (!r1 && r2) EXPECT_EQ(p.label, L::Worse);
    if (r1 == r2) EXPECT_EQ(p.label, L::Tie);
  }
}

TEST(Pairs, EveryBetterHasWorseMirror) {
  const auto real = corpus(4, 10), gen = corpus(3, 100);
  const auto pairs = build_pairs(real, gen);
  const auto h = histogram(pairs);
  EXPECT_EQ(h.at(L::Better), h.at(L::Worse));
  for (const auto& p : pairs)
    if (p.label == L::Better) EXPECT_TRUE(has_mirror(pairs, p));
}

TEST(Pairs, EmptyInputRejected) {
  const auto real = corpus(2, 10);
  EXPECT_THROW(build_pairs(real, {}), UsageError);
  EXPECT_THROW(checkpoint_pairs(real, {}), UsageError);
}

TEST(Pairs, CheckpointPairsMatchIndices) {
  const auto late = corpus(5, 10), early = corpus(3, 100);
  const auto pairs = checkpoint_pairs(late, early);
  ASSERT_EQ(pairs.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& b = pairs[2 * i];
    const auto& w = pairs[2 * i + 1];
    EXPECT_EQ(b.label, L::Better);
    EXPECT_EQ(b.first, &late[i]);
    EXPECT_EQ(b.second, &early[i]);
    EXPECT_EQ(b.first_ref.provenance, Provenance::PseudoReal);
    EXPECT_EQ(b.second_ref.provenance, Provenance::Fake);
    EXPECT_EQ(w.label, L::Worse);
    EXPECT_EQ(w.first, b.second);
    EXPECT_EQ(w.second, b.first);
  }
}

TEST(Batch, StrictThreeWayHoldsExactThirds) {
  const auto real = corpus(20, 10), gen = corpus(15, 100);
  const PairSource s = source(real, gen);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto batch = sample_pair_batch(s, 63, rng);
    ASSERT_EQ(batch.size(), 63u);
    const auto h = histogram(batch);
    EXPECT_EQ(h.at(L::Better), 21u);
    EXPECT_EQ(h.at(L::Worse), 21u);
    EXPECT_EQ(h.at(L::Tie), 21u);
    for (const auto& p : batch) {
      EXPECT_NE(p.first, p.second);
      if (p.label == L::Better) EXPECT_TRUE(has_mirror(batch, p));
    }
  }
}

TEST(Batch, TiesComeFromBothSides) {
  const auto real = corpus(20, 10), gen = corpus(15, 100);
  Rng rng(4);
  const auto batch = sample_pair_batch(source(real, gen), 60, rng);
  std::size_t real_ties = 0, gen_ties = 0;
  for (const auto& p : batch) {
    if (p.label != L::Tie) continue;
    EXPECT_EQ(p.first_ref.provenance, p.second_ref.provenance);
    (p.first_ref.provenance == Provenance::Real ? real_ties : gen_ties)++;
  }
  EXPECT_EQ(real_ties, 10u);
  EXPECT_EQ(gen_ties, 10u);
}

TEST(Batch, TwoClassHasNoTies) {
  const auto real = corpus(5, 10), gen = corpus(5, 100);
  Rng rng(2);
  BatchMix mix;
  mix.ties = false;
  const auto h = histogram(sample_pair_batch(source(real, gen), 64, rng, mix));
  EXPECT_EQ(h.at(L::Better), 32u);
  EXPECT_EQ(h.at(L::Worse), 32u);
  EXPECT_EQ(h.count(L::Tie), 0u);
}

TEST(Batch, IndivisibleStrictBatchRejected) {
  const auto real = corpus(5, 10), gen = corpus(5, 100);
  Rng rng(2);
  EXPECT_THROW(sample_pair_batch(source(real, gen), 64, rng), UsageError);
}

TEST(Batch, MissingSourceNamesClass) {
  const auto real = corpus(5, 10);
  Rng rng(2);
  try {
    sample_pair_batch(source(real, {}), 63, rng);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Better"), std::string::npos) << e.what();
  }
  const std::vector<TokenSequence> one_real = corpus(1, 10), one_gen = corpus(1, 100);
  try {
    sample_pair_batch(source(one_real, one_gen), 63, rng);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Tie"), std::string::npos) << e.what();
  }
}

TEST(Batch, CheckpointShareFillsLeadingSlots) {
  const auto real = corpus(10, 10), gen = corpus(10, 100);
  const auto late = corpus(6, 200), early = corpus(6, 300);
  PairSource s = source(real, gen);
  for (const auto& x : late) s.pseudo_real.push_back(&x);
  for (const auto& x : early) s.fake.push_back(&x);
  BatchMix mix;
  mix.checkpoint_share = 0.5;
  Rng rng(9);
  const auto batch = sample_pair_batch(s, 63, rng, mix);
  std::size_t ckpt_better = 0;
  for (const auto& p : batch) {
    if (p.label != L::Better) continue;
    if (p.first_ref.provenance == Provenance::PseudoReal) {
      EXPECT_EQ(p.second_ref.provenance, Provenance::Fake);
      ++ckpt_better;
    }
  }
  EXPECT_EQ(ckpt_better, 11u);
  mix.checkpoint_share = 0.3;
  EXPECT_THROW(sample_pair_batch(source(real, gen), 63, rng, mix), ConfigError);
}

TEST(Batch, UniformModeHistogramIsFlat) {
  const auto real = corpus(10, 10), gen = corpus(10, 100);
  BatchMix mix;
  mix.mode = BatchMix::Mode::UniformRandom;
  Rng rng(5);
  const std::size_t n = 30000;
  const auto h = histogram(sample_pair_batch(source(real, gen), n, rng, mix));
  const double p = 1.0 / 3.0, se = std::sqrt(n * p * (1 - p));
  for (L l : {L::Better, L::Worse, L::Tie})
    EXPECT_LT(std::abs(double(h.at(l)) - n * p), 3 * se) << static_cast<int>(l);
}

TEST(Batch, GeneratedTagsPropagate) {
  const auto real = corpus(4, 10), gen = corpus(4, 100);
  Rng rng(1);
  for (const auto& p : sample_pair_batch(source(real, gen, 7), 12, rng)) {
    if (p.first_ref.provenance == Provenance::Generated) EXPECT_EQ(p.first_ref.tag, 7);
    if (p.first_ref.provenance == Provenance::Real) EXPECT_EQ(p.first_ref.tag, -1);
  }
}
