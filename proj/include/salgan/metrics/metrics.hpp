#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "salgan/models/generator.hpp"
#include "salgan/models/sequence.hpp"
#include "salgan/oracle/oracle.hpp"

SALGAN_NAMESPACE_BEGIN
namespace metrics {

/// Uniform weights over orders 1..max_order; no brevity penalty. Orders
/// with no matching n-gram (or no n-gram at all) contribute `epsilon`.
struct BleuConfig {
  std::size_t max_order = 3;
  double epsilon = 1e-9;
};

/// Mean over hypotheses of the clipped-precision BLEU against the n-gram
/// counts pooled over every reference. UsageError when either list is
/// empty, n is 0, or no hypothesis has an n-gram of order n.
double corpus_bleu(std::span<const TokenSequence> hypotheses,
                   std::span<const TokenSequence> references, const BleuConfig& config);

/// Scores for every order 1..max_order from one counting pass; entry k-1
/// holds BLEU-k.
std::vector<double> corpus_bleu_orders(std::span<const TokenSequence> hypotheses,
                                       std::span<const TokenSequence> references,
                                       std::size_t max_order, double epsilon = 1e-9);

/// Generated sentences scored against the pooled test set.
double bleu_forward(std::span<const TokenSequence> generated,
                    std::span<const TokenSequence> test, std::size_t n, double epsilon = 1e-9);
/// Test sentences scored against the pooled generated set.
double bleu_backward(std::span<const TokenSequence> test,
                     std::span<const TokenSequence> generated, std::size_t n,
                     double epsilon = 1e-9);

/// Rows of sample embeddings with their mean and population covariance,
/// all in double precision.
class FeatureMatrix {
 public:
  /// ShapeError on ragged rows; UsageError when empty.
  explicit FeatureMatrix(std::vector<std::vector<double>> rows);

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return mean_.size(); }
  const std::vector<double>& row(std::size_t i) const { return rows_[i]; }
  const std::vector<double>& mean() const { return mean_; }
  /// Row-major cols x cols.
  const std::vector<double>& covariance() const { return cov_; }

 private:
  std::vector<std::vector<double>> rows_;
  std::vector<double> mean_;
  std::vector<double> cov_;
};

/// Mean over time of the frozen LSTM's hidden state while reading each
/// sample after the start token.
FeatureMatrix embed_samples(const models::GeneratorParams& embedder,
                            std::span<const TokenSequence> samples);

/// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}). UsageError for
/// fewer than two rows; ShapeError on a column mismatch.
double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b);

/// Drops everything from the first end marker on, and all padding.
TokenSequence content_tokens(const TokenSequence& seq);

enum class EvalMode { Synthetic, Corpus };

struct EvalContext {
  EvalMode mode = EvalMode::Synthetic;
  /// Synthetic mode: quality judge and FD embedder.
  const oracle::OracleModel* oracle = nullptr;
  /// Corpus mode FD embedder (a frozen held-out language model).
  const models::GeneratorParams* evaluator = nullptr;
  std::span<const TokenSequence> test;
  std::size_t seq_len = 20;
  /// 0 generates as many sentences as the test set holds.
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
};

/// One evaluation row. Synthetic mode fills nll_oracle, nll_gen and nll_sum;
/// corpus mode fills the BLEU columns, nll_gen and fd.
struct EvalReport {
  EvalMode mode = EvalMode::Synthetic;
  std::optional<double> nll_oracle, nll_gen, nll_sum, fd;
  /// Orders 2..5.
  std::array<std::optional<double>, 4> bleu_forward, bleu_backward;

  /// (column, value) for every metric this mode emits, in CSV order.
  std::vector<std::pair<std::string, double>> fields() const;
};

EvalReport evaluate_all(const models::GeneratorParams& generator, const EvalContext& context);

/// `bleu2f,...,bleu5f,bleu2b,...,bleu5b,fd`.
std::string extension_csv_header();
/// Values for extension_csv_header(); absent metrics are empty.
std::string extension_csv_row(const EvalReport& report);

}  // namespace metrics
SALGAN_NAMESPACE_END
