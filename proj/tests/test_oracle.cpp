#include <gtest/gtest.h>

#include <cmath>

#include "salgan/errors.hpp"
#include "salgan/oracle/oracle.hpp"
#include "salgan/training/loop.hpp"

using namespace salgan;
using namespace salgan::oracle;

namespace {

bool same_params(const models::GeneratorParams& a, const models::GeneratorParams& b) {
  auto x = a.arrays(), y = b.arrays();
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k]->storage() != y[k]->storage()) return false;
  return true;
}

}  // namespace

TEST(Oracle, SeedDeterminesParameters) {
  const OracleModel a = make_oracle(7, 50, 10, 8, 8), b = make_oracle(7, 50, 10, 8, 8);
  const OracleModel c = make_oracle(8, 50, 10, 8, 8);
  EXPECT_TRUE(same_params(a.params(), b.params()));
  EXPECT_FALSE(same_params(a.params(), c.params()));
  EXPECT_EQ(a.vocab(), 50u);
  EXPECT_EQ(a.seq_len(), 10u);
  EXPECT_THROW(make_oracle(1, 1, 10, 8, 8), UsageError);
  EXPECT_THROW(make_oracle(1, 10, 0, 8, 8), UsageError);
}

TEST(Oracle, StandardNormalWeights) {
  const OracleModel o = make_oracle(3, 200, 12, 16, 16);
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (const auto* a : o.params().arrays())
    for (std::size_t i = 0; i < a->size(); ++i) {
      sum += (*a)[i];
      sq += double((*a)[i]) * (*a)[i];
      ++n;
    }
  const double mean = sum / double(n), var = sq / double(n) - mean * mean;
  EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(double(n)));
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Dataset, ShapesAndRegeneration) {
  const OracleModel o = make_oracle(2, 30, 9, 6, 6);
  const SyntheticDataset d = generate_dataset(o, 120, 80, 5);
  ASSERT_EQ(d.train.size(), 120u);
  ASSERT_EQ(d.test.size(), 80u);
  for (const auto& s : d.train) EXPECT_EQ(s.size(), 9u);
  for (const auto& s : d.test) EXPECT_EQ(s.size(), 9u);
  const SyntheticDataset again = generate_dataset(o, 120, 80, 5);
  EXPECT_EQ(again.train, d.train);
  EXPECT_EQ(again.test, d.test);
  EXPECT_NE(d.train[0], d.test[0]);
}

TEST(Nll, EntropyBelowLogVAndConsistent) {
  const OracleModel o = make_oracle(4, 200, 12, 16, 16);
  const auto a = sample_corpus(o.params(), 12, 10000, 11, 1);
  const auto b = sample_corpus(o.params(), 12, 10000, 11, 2);
  const double ha = nll_oracle(o, a), hb = nll_oracle(o, b);
  EXPECT_LT(ha, std::log(200.0));
  EXPECT_LT(std::abs(ha - hb) / ha, 0.02);
}

TEST(Nll, UniformGenerator) {
  const OracleModel o = make_oracle(4, 60, 8, 8, 8);
  const SyntheticDataset d = generate_dataset(o, 10, 500, 3);
  const models::GeneratorParams uniform = models::zero_generator({60, 4, 4});
  EXPECT_NEAR(nll_gen(uniform, d), std::log(60.0), 1e-5);
  const auto own = sample_corpus(o.params(), 8, 500, 3, 9);
  const auto flat = sample_corpus(uniform, 8, 500, 3, 9);
  EXPECT_GE(nll_oracle(o, flat), nll_oracle(o, own));
}

TEST(Nll, OracleAsGeneratorMatchesEntropy) {
  const OracleModel o = make_oracle(6, 80, 10, 8, 8);
  const SyntheticDataset d = generate_dataset(o, 10, 4000, 1);
  const auto fresh = sample_corpus(o.params(), 10, 4000, 1, 7);
  EXPECT_NEAR(nll_gen(o.params(), d), nll_oracle(o, fresh), 0.05);
}

TEST(Nll, EmptyRejected) {
  const OracleModel o = make_oracle(6, 20, 4, 4, 4);
  EXPECT_THROW(nll_oracle(o, {}), UsageError);
  EXPECT_THROW(nll_gen(o.params(), SyntheticDataset{}), UsageError);
}

TEST(Nll, MleTrainingLowersNllGen) {
  const OracleModel o = make_oracle(9, 40, 8, 8, 8);
  const SyntheticDataset d = generate_dataset(o, 400, 200, 9);
  Rng rng(1);
  const auto g0 = models::truncated_normal_generator({40, 8, 8}, rng, 0.1);
  training::PretrainConfig pc;
  pc.epochs = 8;
  pc.seed = 2;
  const auto r = training::mle_pretrain(g0, d.train, pc);
  EXPECT_LT(nll_gen(r.generator, d), nll_gen(g0, d));
  // No trained model beats the oracle's own self-likelihood beyond noise.
  EXPECT_GT(nll_gen(r.generator, d), nll_gen(o.params(), d) - 0.05);
}
