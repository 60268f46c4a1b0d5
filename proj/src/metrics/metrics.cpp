#include "salgan/metrics/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string_view>
#include <unordered_map>

#include <Eigen/Dense>

#include "salgan/errors.hpp"
#include "salgan/parallel.hpp"

SALGAN_NAMESPACE_BEGIN
namespace metrics {

namespace {

using Key = std::string;
using Counts = std::unordered_map<Key, std::uint32_t>;

Key ngram_key(const std::vector<TokenId>& ids, std::size_t pos, std::size_t n) {
  return Key(reinterpret_cast<const char*>(ids.data() + pos), n * sizeof(TokenId));
}

// Counts of every order 1..max_order; entry k-1 holds order k.
std::vector<Counts> count_ngrams(const std::vector<TokenId>& ids, std::size_t max_order) {
  std::vector<Counts> out(max_order);
  for (std::size_t n = 1; n <= max_order; ++n)
    for (std::size_t p = 0; p + n <= ids.size(); ++p) ++out[n - 1][ngram_key(ids, p, n)];
  return out;
}

// The whole reference corpus acts as one reference: counts add up.
std::vector<Counts> pooled_counts(std::span<const TokenSequence> refs, std::size_t max_order) {
  std::vector<Counts> pool(max_order);
  for (const auto& r : refs) {
    const auto c = count_ngrams(r.ids, max_order);
    for (std::size_t k = 0; k < max_order; ++k)
      for (const auto& [key, n] : c[k]) pool[k][key] += n;
  }
  return pool;
}

void check_inputs(std::span<const TokenSequence> hyps, std::span<const TokenSequence> refs,
                  std::size_t max_order) {
  if (hyps.empty() || refs.empty()) throw UsageError("BLEU needs nonempty hypothesis and reference lists");
  if (max_order == 0) throw UsageError("BLEU order must be at least 1");
  const bool any = std::any_of(hyps.begin(), hyps.end(),
                               [&](const TokenSequence& s) { return s.size() >= max_order; });
  if (!any)
    throw UsageError("BLEU order " + std::to_string(max_order) +
                     " exceeds the length of every hypothesis");
}

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Mat covariance_of(const FeatureMatrix& f) {
  const auto d = static_cast<Eigen::Index>(f.cols());
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      f.covariance().data(), d, d);
}

Mat psd_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<double> corpus_bleu_orders(std::span<const TokenSequence> hyps,
                                       std::span<const TokenSequence> refs,
                                       std::size_t max_order, double eps) {
  check_inputs(hyps, refs, max_order);
  const std::vector<Counts> pool = pooled_counts(refs, max_order);
  // log_p[i][k]: log clipped precision of hypothesis i at order k+1.
  std::vector<std::vector<double>> log_p(hyps.size(), std::vector<double>(max_order));
  parallel_for(hyps.size(), [&](std::size_t i) {
    const auto c = count_ngrams(hyps[i].ids, max_order);
    for (std::size_t k = 0; k < max_order; ++k) {
      std::size_t total = 0, matched = 0;
      for (const auto& [key, n] : c[k]) {
        total += n;
        auto it = pool[k].find(key);
        if (it != pool[k].end()) matched += std::min(n, it->second);
      }
      const double p = matched == 0 ? eps : double(matched) / double(total);
      log_p[i][k] = std::log(p);
    }
  });
  std::vector<double> out(max_order, 0.0);
  for (std::size_t n = 1; n <= max_order; ++n) {
    double sum = 0.0;
    for (const auto& lp : log_p) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += lp[k];
      sum += std::exp(acc / double(n));
    }
    out[n - 1] = sum / double(hyps.size());
  }
  return out;
}

double corpus_bleu(std::span<const TokenSequence> hyps, std::span<const TokenSequence> refs,
                   const BleuConfig& config) {
  return corpus_bleu_orders(hyps, refs, config.max_order, config.epsilon).back();
}

double bleu_forward(std::span<const TokenSequence> generated, std::span<const TokenSequence> test,
                    std::size_t n, double eps) {
  return corpus_bleu(generated, test, {n, eps});
}

double bleu_backward(std::span<const TokenSequence> test, std::span<const TokenSequence> generated,
                     std::size_t n, double eps) {
  return corpus_bleu(test, generated, {n, eps});
}

FeatureMatrix::FeatureMatrix(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw UsageError("feature matrix needs at least one row");
  const std::size_t d = rows_[0].size();
  for (const auto& r : rows_)
    if (r.size() != d) throw ShapeError("feature rows must share one dimension");
  mean_.assign(d, 0.0);
  for (const auto& r : rows_)
    for (std::size_t j = 0; j < d; ++j) mean_[j] += r[j];
  const double n = static_cast<double>(rows_.size());
  for (double& m : mean_) m /= n;
  cov_.assign(d * d, 0.0);
  for (const auto& r : rows_)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = r[a] - mean_[a];
      for (std::size_t b = a; b < d; ++b) cov_[a * d + b] += da * (r[b] - mean_[b]);
    }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      cov_[a * d + b] /= n;
      cov_[b * d + a] = cov_[a * d + b];
    }
}

FeatureMatrix embed_samples(const models::GeneratorParams& embedder,
                            std::span<const TokenSequence> samples) {
  if (samples.empty()) throw UsageError("embed_samples needs at least one sample");
  const std::size_t h = embedder.dims.hidden;
  std::vector<std::vector<double>> rows(samples.size(), std::vector<double>(h, 0.0));
  parallel_for(samples.size(), [&](std::size_t i) {
    const TokenSequence& s = samples[i];
    if (s.empty()) throw UsageError("embed_samples got an empty sample");
    for (TokenId t : s.ids)
      if (t < 0 || static_cast<std::size_t>(t) >= embedder.dims.vocab)
        throw UsageError("token " + std::to_string(t) + " outside the embedder vocabulary");
    models::LstmRunner runner(embedder);
    models::LstmState state = models::initial_state(embedder.dims);
    runner.advance(kStartToken, state);
    for (TokenId t : s.ids) {
      runner.advance(t, state);
      for (std::size_t j = 0; j < h; ++j) rows[i][j] += state.h[j];
    }
    for (double& v : rows[i]) v /= static_cast<double>(s.size());
  });
  return FeatureMatrix(std::move(rows));
}

double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.cols() != b.cols())
    throw ShapeError("frechet_distance: feature dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.cols()) + " differ");
  if (a.rows() < 2 || b.rows() < 2) throw UsageError("frechet_distance needs at least two rows per set");
  const auto d = static_cast<Eigen::Index>(a.cols());
  const Vec diff = Eigen::Map<const Vec>(a.mean().data(), d) - Eigen::Map<const Vec>(b.mean().data(), d);
  const Mat sa = covariance_of(a), sb = covariance_of(b);
  // tr((Sa Sb)^{1/2}) = tr((Sa^{1/2} Sb Sa^{1/2})^{1/2}), the inner matrix symmetric PSD.
  const Mat ra = psd_sqrt(sa);
  const Mat inner = ra * sb * ra;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = diff.squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
  return value < 0.0 && value > -1e-6 ? 0.0 : value;
}

TokenSequence content_tokens(const TokenSequence& seq) {
  TokenSequence out;
  for (TokenId t : seq.ids) {
    if (t == kEndToken) break;
    if (t != kPadToken) out.ids.push_back(t);
  }
  return out;
}

std::vector<std::pair<std::string, double>> EvalReport::fields() const {
  std::vector<std::pair<std::string, double>> out;
  if (mode == EvalMode::Synthetic) {
    if (nll_oracle) out.emplace_back("nll_oracle", *nll_oracle);
    if (nll_gen) out.emplace_back("nll_gen", *nll_gen);
    if (nll_sum) out.emplace_back("nll_sum", *nll_sum);
    return out;
  }
  for (std::size_t k = 0; k < 4; ++k)
    if (bleu_forward[k]) out.emplace_back("bleu" + std::to_string(k + 2) + "f", *bleu_forward[k]);
  for (std::size_t k = 0; k < 4; ++k)
    if (bleu_backward[k]) out.emplace_back("bleu" + std::to_string(k + 2) + "b", *bleu_backward[k]);
  if (nll_gen) out.emplace_back("nll_gen", *nll_gen);
  if (fd) out.emplace_back("fd", *fd);
  return out;
}

EvalReport evaluate_all(const models::GeneratorParams& generator, const EvalContext& ctx) {
  if (ctx.test.empty()) throw UsageError("evaluation needs a nonempty test set");
  EvalReport r;
  r.mode = ctx.mode;
  const std::size_t count = ctx.sample_count ? ctx.sample_count : ctx.test.size();
  const std::vector<TokenSequence> samples =
      oracle::sample_corpus(generator, ctx.seq_len, count, ctx.seed, 0);
  r.nll_gen = oracle::mean_nll(generator, ctx.test);
  if (ctx.mode == EvalMode::Synthetic) {
    if (!ctx.oracle) throw UsageError("synthetic evaluation needs an oracle");
    r.nll_oracle = oracle::nll_oracle(*ctx.oracle, samples);
    r.nll_sum = *r.nll_oracle + *r.nll_gen;
    return r;
  }
  if (!ctx.evaluator) throw UsageError("corpus evaluation needs an evaluator model");
  std::vector<TokenSequence> gen_text, test_text;
  for (const auto& s : samples) gen_text.push_back(content_tokens(s));
  for (const auto& s : ctx.test) test_text.push_back(content_tokens(s));
  const auto fwd = corpus_bleu_orders(gen_text, test_text, 5);
  const auto bwd = corpus_bleu_orders(test_text, gen_text, 5);
  for (std::size_t k = 0; k < 4; ++k) {
    r.bleu_forward[k] = fwd[k + 1];
    r.bleu_backward[k] = bwd[k + 1];
  }
  r.fd = frechet_distance(embed_samples(*ctx.evaluator, samples), embed_samples(*ctx.evaluator, ctx.test));
  return r;
}

std::string extension_csv_header() {
  return "bleu2f,bleu3f,bleu4f,bleu5f,bleu2b,bleu3b,bleu4b,bleu5b,fd";
}

std::string extension_csv_row(const EvalReport& r) {
  std::string out;
  auto put = [&](const std::optional<double>& v, bool first) {
    if (!first) out += ',';
    if (v) out += number(*v);
  };
  for (std::size_t k = 0; k < 4; ++k) put(r.bleu_forward[k], k == 0);
  for (std::size_t k = 0; k < 4; ++k) put(r.bleu_backward[k], false);
  put(r.fd, false);
  return out;
}

}  // namespace metrics
SALGAN_NAMESPACE_END
