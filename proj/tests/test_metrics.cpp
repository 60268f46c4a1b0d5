#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "salgan/errors.hpp"
#include "salgan/metrics/metrics.hpp"

using namespace salgan;
using namespace salgan::metrics;

namespace {

// Tokens a=4, b=5, c=6.
const TokenSequence kRef{4, 5, 6, 4};
const TokenSequence kHyp{4, 5, 4, 4};

std::vector<TokenSequence> random_corpus(std::size_t n, std::size_t len, TokenId lo, TokenId hi,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<TokenId> tok(lo, hi);
  std::vector<TokenSequence> out(n);
  for (auto& s : out)
    for (std::size_t t = 0; t < len; ++t) s.ids.push_back(tok(rng));
  return out;
}

FeatureMatrix gaussian_rows(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) mix(i, j) = z(rng) * 0.5 + (i == j);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    Eigen::VectorXd v(d);
    for (std::size_t j = 0; j < d; ++j) v(j) = z(rng);
    const Eigen::VectorXd x = mix * v;
    for (std::size_t j = 0; j < d; ++j) r[j] = x(j) + shift * double(j + 1);
  }
  return FeatureMatrix(rows);
}

// Independent evaluation: eigenvalues of the (non-symmetric) product Sa Sb.
double reference_fd(const FeatureMatrix& a, const FeatureMatrix& b) {
  const auto d = static_cast<Eigen::Index>(a.cols());
  Eigen::MatrixXd sa(d, d), sb(d, d);
  double mean_term = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    mean_term += std::pow(a.mean()[i] - b.mean()[i], 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      sa(i, j) = a.covariance()[i * d + j];
      sb(i, j) = b.covariance()[i * d + j];
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(sa * sb);
  double tr = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) tr += std::sqrt(std::complex<double>(es.eigenvalues()(i))).real();
  return mean_term + sa.trace() + sb.trace() - 2.0 * tr;
}

}  // namespace

TEST(Bleu, HandCountedCase) {
  const std::vector<TokenSequence> refs{kRef}, hyps{kHyp};
  EXPECT_NEAR(bleu_forward(hyps, refs, 2), std::sqrt(0.75 * (1.0 / 3.0)), 1e-9);
  EXPECT_NEAR(bleu_forward(hyps, refs, 2), 0.5, 1e-9);
  EXPECT_NEAR(bleu_forward(hyps, refs, 1), 0.75, 1e-12);
}

TEST(Bleu, IdenticalCorpusScoresOne) {
  const auto corpus = random_corpus(50, 10, 4, 40, 1);
  for (std::size_t n = 1; n <= 5; ++n) EXPECT_NEAR(bleu_forward(corpus, corpus, n), 1.0, 1e-12);
}

TEST(Bleu, DisjointVocabularyNearZero) {
  const auto a = random_corpus(20, 8, 4, 20, 1), b = random_corpus(20, 8, 30, 50, 2);
  EXPECT_LT(bleu_forward(a, b, 2), 1e-3);
  EXPECT_GE(bleu_forward(a, b, 2), 0.0);
}

TEST(Bleu, Errors) {
  const std::vector<TokenSequence> shorts{TokenSequence{4, 5}, TokenSequence{6}};
  EXPECT_THROW(bleu_forward(shorts, shorts, 3), UsageError);
  EXPECT_THROW(bleu_forward({}, shorts, 1), UsageError);
  EXPECT_THROW(bleu_forward(shorts, {}, 1), UsageError);
  EXPECT_THROW(bleu_forward(shorts, shorts, 0), UsageError);
  EXPECT_NO_THROW(bleu_forward(shorts, shorts, 2));
}

TEST(Bleu, SymmetricCorporaAgree) {
  const auto corpus = random_corpus(30, 7, 4, 15, 3);
  std::vector<TokenSequence> reversed(corpus.rbegin(), corpus.rend());
  EXPECT_EQ(bleu_forward(corpus, reversed, 3), bleu_backward(corpus, reversed, 3));
}

TEST(Bleu, CollapsedGeneratorLosesBackwardScore) {
  const auto test = random_corpus(200, 8, 4, 30, 4);
  const std::vector<TokenSequence> collapsed(200, test[0]);
  const double fwd = bleu_forward(collapsed, test, 3), bwd = bleu_backward(test, collapsed, 3);
  EXPECT_NEAR(fwd, 1.0, 1e-12);
  EXPECT_LT(bwd, 0.25 * fwd);
}

TEST(Bleu, MonotoneUnderCorruption) {
  const auto test = random_corpus(100, 10, 4, 40, 5);
  Rng rng(6);
  std::vector<std::pair<std::size_t, std::size_t>> positions;
  for (std::size_t i = 0; i < test.size(); ++i)
    for (std::size_t t = 0; t < 10; ++t) positions.push_back({i, t});
  std::shuffle(positions.begin(), positions.end(), rng);
  std::uniform_int_distribution<TokenId> tok(4, 40);
  std::vector<TokenId> replacement(positions.size());
  for (auto& r : replacement) r = tok(rng);
  double prev = 2.0;
  for (double p : {0.0, 0.25, 0.5, 1.0}) {
    auto gen = test;
    const auto k = static_cast<std::size_t>(p * double(positions.size()));
    for (std::size_t j = 0; j < k; ++j) gen[positions[j].first].ids[positions[j].second] = replacement[j];
    const double score = bleu_forward(gen, test, 4);
    EXPECT_LE(score, prev) << p;
    prev = score;
  }
}

TEST(Bleu, OrdersMatchSingleCalls) {
  const auto a = random_corpus(40, 9, 4, 12, 7), b = random_corpus(60, 9, 4, 12, 8);
  const auto all = corpus_bleu_orders(a, b, 5);
  for (std::size_t n = 1; n <= 5; ++n) EXPECT_DOUBLE_EQ(all[n - 1], bleu_forward(a, b, n));
}

TEST(Frechet, OneDimensionalClosedForm) {
  for (double d : {0.0, 0.5, 3.0}) {
    const FeatureMatrix a({{1.0}, {3.0}, {2.0}, {6.0}});
    const FeatureMatrix b({{1.0 + d}, {3.0 + d}, {2.0 + d}, {6.0 + d}});
    EXPECT_NEAR(frechet_distance(a, b), d * d, 1e-9);
  }
}

TEST(Frechet, IdentityDuplicationAndSymmetry) {
  const FeatureMatrix a = gaussian_rows(50, 4, 0.0, 1), b = gaussian_rows(70, 4, 0.3, 2);
  EXPECT_LT(std::abs(frechet_distance(a, a)), 1e-6);
  std::vector<std::vector<double>> doubled;
  for (std::size_t i = 0; i < a.rows(); ++i) doubled.push_back(a.row(i));
  for (std::size_t i = 0; i < a.rows(); ++i) doubled.push_back(a.row(i));
  EXPECT_LT(std::abs(frechet_distance(a, FeatureMatrix(doubled))), 1e-6);
  EXPECT_NEAR(frechet_distance(a, b), frechet_distance(b, a), 1e-9);
  EXPECT_GT(frechet_distance(a, b), 0.0);
}

TEST(Frechet, MatchesIndependentEigendecomposition) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FeatureMatrix a = gaussian_rows(40, 3, 0.0, 10 + seed), b = gaussian_rows(60, 3, 0.7, 20 + seed);
    EXPECT_NEAR(frechet_distance(a, b), reference_fd(a, b), 1e-6) << seed;
  }
}

TEST(Frechet, Errors) {
  const FeatureMatrix a({{1.0, 2.0}, {2.0, 1.0}}), b({{1.0}, {2.0}}), one({{1.0, 2.0}});
  EXPECT_THROW(frechet_distance(a, b), ShapeError);
  EXPECT_THROW(frechet_distance(a, one), UsageError);
  EXPECT_THROW(FeatureMatrix({{1.0}, {1.0, 2.0}}), ShapeError);
}

TEST(Frechet, CovarianceSymmetricPsd) {
  const FeatureMatrix a = gaussian_rows(30, 5, 0.0, 3);
  const auto d = static_cast<Eigen::Index>(a.cols());
  Eigen::MatrixXd s(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) s(i, j) = a.covariance()[i * d + j];
  EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-8);
}

TEST(Embed, RowsAndDimensions) {
  const auto o = oracle::make_oracle(3, 20, 6, 5, 7);
  const std::vector<TokenSequence> same{TokenSequence{4, 5, 6}, TokenSequence{4, 5, 6}, TokenSequence{7, 7}};
  const FeatureMatrix f = embed_samples(o.params(), same);
  EXPECT_EQ(f.cols(), 7u);
  EXPECT_EQ(f.row(0), f.row(1));
  EXPECT_NE(f.row(0), f.row(2));
  for (std::size_t i = 0; i < f.rows(); ++i)
    for (double v : f.row(i)) EXPECT_TRUE(std::isfinite(v));
}

TEST(Embed, DisjointOracleSamplesAgreeInMean) {
  const auto o = oracle::make_oracle(5, 30, 8, 6, 6);
  const auto a = oracle::sample_corpus(o.params(), 8, 2000, 1, 1);
  const auto b = oracle::sample_corpus(o.params(), 8, 2000, 1, 2);
  const FeatureMatrix fa = embed_samples(o.params(), a), fb = embed_samples(o.params(), b);
  for (std::size_t j = 0; j < fa.cols(); ++j) {
    const double se = std::sqrt(fa.covariance()[j * fa.cols() + j] / 2000.0 +
                                fb.covariance()[j * fb.cols() + j] / 2000.0);
    EXPECT_LT(std::abs(fa.mean()[j] - fb.mean()[j]), 3 * se) << j;
  }
}

TEST(Evaluate, SyntheticFields) {
  const auto o = oracle::make_oracle(2, 25, 6, 5, 5);
  const auto data = oracle::generate_dataset(o, 100, 400, 2);
  EvalContext ctx;
  ctx.oracle = &o;
  ctx.test = data.test;
  ctx.seq_len = 6;
  ctx.seed = 4;
  const EvalReport r = evaluate_all(o.params(), ctx);
  const auto fields = r.fields();
  ASSERT_EQ(fields.size(), 3u);
  EXPECT_EQ(fields[0].first, "nll_oracle");
  EXPECT_EQ(fields[1].first, "nll_gen");
  EXPECT_EQ(fields[2].first, "nll_sum");
  EXPECT_DOUBLE_EQ(*r.nll_sum, *r.nll_oracle + *r.nll_gen);
  // The oracle judging itself: both sides estimate its entropy rate.
  EXPECT_NEAR(*r.nll_oracle, *r.nll_gen, 0.1);
  const EvalReport again = evaluate_all(o.params(), ctx);
  EXPECT_EQ(*again.nll_oracle, *r.nll_oracle);
}

TEST(Evaluate, CorpusFields) {
  const auto o = oracle::make_oracle(2, 25, 6, 5, 5);
  const auto data = oracle::generate_dataset(o, 100, 200, 2);
  EvalContext ctx;
  ctx.mode = EvalMode::Corpus;
  ctx.evaluator = &o.params();
  ctx.test = data.test;
  ctx.seq_len = 6;
  const EvalReport r = evaluate_all(o.params(), ctx);
  std::vector<std::string> names;
  for (const auto& [k, _] : r.fields()) names.push_back(k);
  EXPECT_EQ(names, (std::vector<std::string>{"bleu2f", "bleu3f", "bleu4f", "bleu5f", "bleu2b", "bleu3b",
                                             "bleu4b", "bleu5b", "nll_gen", "fd"}));
  for (const auto& [_, v] : r.fields()) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(extension_csv_header(), "bleu2f,bleu3f,bleu4f,bleu5f,bleu2b,bleu3b,bleu4b,bleu5b,fd");
  const std::string row = extension_csv_row(r);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 8);
  EXPECT_EQ(extension_csv_row(EvalReport{}), ",,,,,,,,");
}

TEST(Evaluate, ContentTokensStripMarkers) {
  EXPECT_EQ(content_tokens(TokenSequence{5, 1, 6, 3, 7, 1}), (TokenSequence{5, 6}));
  EXPECT_EQ(content_tokens(TokenSequence{3, 5}), TokenSequence{});
}
