#include "salgan/models/comparator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "salgan/diffcore/kernels.hpp"
#include "salgan/diffcore/ops.hpp"
#include "salgan/errors.hpp"
#include "salgan/models/init.hpp"

SALGAN_NAMESPACE_BEGIN
namespace models {

namespace {

bool window_is_padding(const EncoderDims& dims, std::span<const TokenId> toks, std::size_t pos,
                       std::size_t width) {
  if (!dims.pad_id) return false;
  for (std::size_t j = 0; j < width; ++j)
    if (toks[pos + j] != *dims.pad_id) return false;
  return true;
}

void check_tokens(const EncoderDims& dims, std::span<const TokenId> toks) {
  for (TokenId id : toks)
    if (id < 0 || static_cast<std::size_t>(id) >= dims.vocab)
      throw UsageError("token " + std::to_string(id) + " outside comparator vocabulary of size " +
                       std::to_string(dims.vocab));
}

void softmax_small(std::span<Real> v) {
  const Real mx = *std::max_element(v.begin(), v.end());
  Real total = 0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    total += x;
  }
  for (auto& x : v) x /= total;
}

}  // namespace

std::size_t EncoderDims::feature_size() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t EncoderDims::max_width() const {
  return widths.empty() ? 1 : *std::max_element(widths.begin(), widths.end());
}

std::vector<DenseArray*> ComparatorParams::arrays() {
  std::vector<DenseArray*> out{&encoder.embedding};
  for (auto& f : encoder.filters) out.push_back(&f);
  for (auto& b : encoder.filter_bias) out.push_back(&b);
  out.push_back(&classifier);
  out.push_back(&classifier_bias);
  return out;
}

std::vector<const DenseArray*> ComparatorParams::arrays() const {
  std::vector<const DenseArray*> out{&encoder.embedding};
  for (auto& f : encoder.filters) out.push_back(&f);
  for (auto& b : encoder.filter_bias) out.push_back(&b);
  out.push_back(&classifier);
  out.push_back(&classifier_bias);
  return out;
}

namespace {
std::vector<std::string> encoder_names(const TextEncoderParams& e) {
  std::vector<std::string> n{"embedding"};
  for (std::size_t k = 0; k < e.filters.size(); ++k)
    n.push_back("filter" + std::to_string(e.dims.widths[k]));
  for (std::size_t k = 0; k < e.filters.size(); ++k)
    n.push_back("filter" + std::to_string(e.dims.widths[k]) + "_bias");
  n.push_back("classifier");
  n.push_back("classifier_bias");
  return n;
}
}  // namespace

std::vector<std::string> ComparatorParams::names() const { return encoder_names(encoder); }
std::vector<std::string> BinaryDiscParams::names() const { return encoder_names(encoder); }

std::vector<DenseArray*> BinaryDiscParams::arrays() {
  std::vector<DenseArray*> out{&encoder.embedding};
  for (auto& f : encoder.filters) out.push_back(&f);
  for (auto& b : encoder.filter_bias) out.push_back(&b);
  out.push_back(&classifier);
  out.push_back(&classifier_bias);
  return out;
}

std::vector<const DenseArray*> BinaryDiscParams::arrays() const {
  std::vector<const DenseArray*> out{&encoder.embedding};
  for (auto& f : encoder.filters) out.push_back(&f);
  for (auto& b : encoder.filter_bias) out.push_back(&b);
  out.push_back(&classifier);
  out.push_back(&classifier_bias);
  return out;
}

TextEncoderParams zero_encoder(const EncoderDims& dims) {
  if (dims.widths.size() != dims.counts.size() || dims.widths.empty())
    throw UsageError("encoder needs one filter count per filter width");
  if (dims.vocab < 2 || dims.embed == 0) throw UsageError("encoder needs vocab >= 2, embed > 0");
  TextEncoderParams p;
  p.dims = dims;
  p.embedding = DenseArray({dims.vocab, dims.embed});
  for (std::size_t k = 0; k < dims.widths.size(); ++k) {
    if (dims.widths[k] == 0 || dims.counts[k] == 0)
      throw UsageError("filter widths and counts must be positive");
    p.filters.emplace_back(diff::Shape{dims.widths[k] * dims.embed, dims.counts[k]});
    p.filter_bias.emplace_back(diff::Shape{1, dims.counts[k]});
  }
  return p;
}

ComparatorParams zero_comparator(const EncoderDims& dims, std::size_t classes) {
  if (classes != 2 && classes != 3) throw UsageError("comparator has 2 or 3 classes");
  ComparatorParams p;
  p.encoder = zero_encoder(dims);
  p.classes = classes;
  p.classifier = DenseArray({2 * dims.feature_size(), classes});
  p.classifier_bias = DenseArray({1, classes});
  return p;
}

BinaryDiscParams zero_binary_disc(const EncoderDims& dims) {
  BinaryDiscParams p;
  p.encoder = zero_encoder(dims);
  p.classifier = DenseArray({dims.feature_size(), 2});
  p.classifier_bias = DenseArray({1, 2});
  return p;
}

namespace {
void init_encoder(TextEncoderParams& e, Rng& rng) {
  fill_truncated_normal(e.embedding, rng, 0.1);
  for (auto& f : e.filters) fill_truncated_normal(f, rng, 0.1);
}
}  // namespace

ComparatorParams init_comparator(const EncoderDims& dims, Rng& rng, std::size_t classes) {
  ComparatorParams p = zero_comparator(dims, classes);
  init_encoder(p.encoder, rng);
  fill_truncated_normal(p.classifier, rng, 0.1);
  return p;
}

BinaryDiscParams init_binary_disc(const EncoderDims& dims, Rng& rng) {
  BinaryDiscParams p = zero_binary_disc(dims);
  init_encoder(p.encoder, rng);
  fill_truncated_normal(p.classifier, rng, 0.1);
  return p;
}

std::vector<TokenId> padded_tokens(const EncoderDims& dims, const TokenSequence& seq) {
  std::vector<TokenId> toks = seq.ids;
  const TokenId pad = dims.pad_id.value_or(kPadToken);
  while (toks.size() < dims.max_width()) toks.push_back(pad);
  check_tokens(dims, toks);
  return toks;
}

std::vector<Real> encode_text(const TextEncoderParams& p, const TokenSequence& seq) {
  const auto& d = p.dims;
  const std::vector<TokenId> toks = padded_tokens(d, seq);
  std::vector<Real> out(d.feature_size(), Real(0));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < d.widths.size(); ++k) {
    const std::size_t w = d.widths[k], n = d.counts[k], e = d.embed;
    std::vector<Real> resp(n);
    for (std::size_t pos = 0; pos + w <= toks.size(); ++pos) {
      if (window_is_padding(d, toks, pos, w)) continue;
      std::copy_n(p.filter_bias[k].data(), n, resp.data());
      for (std::size_t j = 0; j < w; ++j) {
        const Real* x = p.embedding.data() + static_cast<std::size_t>(toks[pos + j]) * e;
        for (std::size_t q = 0; q < e; ++q) {
          const Real* frow = p.filters[k].data() + (j * e + q) * n;
          for (std::size_t c = 0; c < n; ++c) resp[c] += x[q] * frow[c];
        }
      }
      for (std::size_t c = 0; c < n; ++c) out[offset + c] = std::max(out[offset + c], resp[c]);
    }
    offset += n;
  }
  return out;
}

EncoderCache::EncoderCache(const TextEncoderParams& params) : params_(params) {
  const auto& d = params.dims;
  tables_.resize(d.widths.size());
  for (std::size_t k = 0; k < d.widths.size(); ++k) {
    const std::size_t w = d.widths[k], n = d.counts[k], e = d.embed;
    tables_[k].assign(w, std::vector<Real>(d.vocab * n, Real(0)));
    for (std::size_t j = 0; j < w; ++j) {
      // table = E (V x e) * F[j*e .. (j+1)*e, :] (e x n)
      diff::kernels::gemm_acc(params.embedding.data(), params.filters[k].data() + j * e * n,
                              tables_[k][j].data(), d.vocab, e, n);
    }
  }
}

std::vector<Real> EncoderCache::encode(const TokenSequence& seq) const {
  std::vector<Real> out(params_.dims.feature_size());
  encode_into(seq, out);
  return out;
}

void EncoderCache::encode_into(const TokenSequence& seq, std::span<Real> out) const {
  const auto& d = params_.dims;
  if (out.size() != d.feature_size()) throw ShapeError("encode_into: output has wrong size");
  const std::vector<TokenId> toks = padded_tokens(d, seq);
  std::fill(out.begin(), out.end(), Real(0));
  std::size_t offset = 0;
  std::vector<Real> resp;
  for (std::size_t k = 0; k < d.widths.size(); ++k) {
    const std::size_t w = d.widths[k], n = d.counts[k];
    resp.resize(n);
    for (std::size_t pos = 0; pos + w <= toks.size(); ++pos) {
      if (window_is_padding(d, toks, pos, w)) continue;
      std::copy_n(params_.filter_bias[k].data(), n, resp.data());
      for (std::size_t j = 0; j < w; ++j) {
        const Real* row = tables_[k][j].data() + static_cast<std::size_t>(toks[pos + j]) * n;
        for (std::size_t c = 0; c < n; ++c) resp[c] += row[c];
      }
      Real* o = out.data() + offset;
      for (std::size_t c = 0; c < n; ++c) o[c] = std::max(o[c], resp[c]);
    }
    offset += n;
  }
}

Comparison compare_features(const ComparatorParams& p, std::span<const Real> f1,
                            std::span<const Real> f2) {
  const std::size_t F = p.encoder.dims.feature_size(), K = p.classes;
  if (f1.size() != F || f2.size() != F) throw ShapeError("compare_features: wrong feature size");
  Real logits[3] = {0, 0, 0};
  for (std::size_t c = 0; c < K; ++c) logits[c] = p.classifier_bias[c];
  for (std::size_t i = 0; i < F; ++i) {
    const Real* w1 = p.classifier.data() + i * K;
    const Real* w2 = p.classifier.data() + (F + i) * K;
    for (std::size_t c = 0; c < K; ++c) logits[c] += f1[i] * w1[c] + f2[i] * w2[c];
  }
  softmax_small({logits, K});
  Comparison out;
  out.better = logits[0];
  out.worse = logits[1];
  out.tie = K == 3 ? logits[2] : Real(0);
  return out;
}

Comparison compare(const ComparatorParams& p, const TokenSequence& x1, const TokenSequence& x2) {
  return compare_features(p, encode_text(p.encoder, x1), encode_text(p.encoder, x2));
}

Real binary_from_features(const BinaryDiscParams& p, std::span<const Real> f) {
  const std::size_t F = p.encoder.dims.feature_size();
  if (f.size() != F) throw ShapeError("binary_from_features: wrong feature size");
  Real logits[2] = {p.classifier_bias[0], p.classifier_bias[1]};
  for (std::size_t i = 0; i < F; ++i) {
    logits[0] += f[i] * p.classifier[2 * i];
    logits[1] += f[i] * p.classifier[2 * i + 1];
  }
  softmax_small({logits, 2});
  return logits[1];
}

Real binary_discriminate(const BinaryDiscParams& p, const TokenSequence& x) {
  return binary_from_features(p, encode_text(p.encoder, x));
}

std::vector<diff::NodeId> TapedComparator::ids() const {
  std::vector<diff::NodeId> out{encoder.embedding};
  out.insert(out.end(), encoder.filters.begin(), encoder.filters.end());
  out.insert(out.end(), encoder.filter_bias.begin(), encoder.filter_bias.end());
  out.push_back(classifier);
  out.push_back(classifier_bias);
  return out;
}

std::vector<diff::NodeId> TapedBinaryDisc::ids() const {
  std::vector<diff::NodeId> out{encoder.embedding};
  out.insert(out.end(), encoder.filters.begin(), encoder.filters.end());
  out.insert(out.end(), encoder.filter_bias.begin(), encoder.filter_bias.end());
  out.push_back(classifier);
  out.push_back(classifier_bias);
  return out;
}

namespace {
TapedEncoder bind_encoder(diff::Tape& tape, const TextEncoderParams& e) {
  TapedEncoder out;
  out.embedding = tape.parameter(e.embedding);
  for (const auto& f : e.filters) out.filters.push_back(tape.parameter(f));
  for (const auto& b : e.filter_bias) out.filter_bias.push_back(tape.parameter(b));
  return out;
}
}  // namespace

TapedComparator bind(diff::Tape& tape, const ComparatorParams& p) {
  TapedComparator out;
  out.encoder = bind_encoder(tape, p.encoder);
  out.classifier = tape.parameter(p.classifier);
  out.classifier_bias = tape.parameter(p.classifier_bias);
  return out;
}

TapedBinaryDisc bind(diff::Tape& tape, const BinaryDiscParams& p) {
  TapedBinaryDisc out;
  out.encoder = bind_encoder(tape, p.encoder);
  out.classifier = tape.parameter(p.classifier);
  out.classifier_bias = tape.parameter(p.classifier_bias);
  return out;
}

diff::NodeId encode_taped(diff::Tape& tape, const TapedEncoder& enc, const EncoderDims& d,
                          const TokenSequence& seq) {
  using namespace diff;
  const std::vector<TokenId> toks = padded_tokens(d, seq);
  std::vector<NodeId> banks;
  for (std::size_t k = 0; k < d.widths.size(); ++k) {
    const std::size_t w = d.widths[k];
    std::vector<int> window_ids;
    std::size_t windows = 0;
    for (std::size_t pos = 0; pos + w <= toks.size(); ++pos) {
      if (window_is_padding(d, toks, pos, w)) continue;
      for (std::size_t j = 0; j < w; ++j) window_ids.push_back(toks[pos + j]);
      ++windows;
    }
    if (windows == 0) {
      banks.push_back(tape.constant(DenseArray({1, d.counts[k]})));
      continue;
    }
    NodeId stacked = gather(tape, enc.embedding, window_ids);
    NodeId rows = reshape(tape, stacked, {windows, w * d.embed});
    NodeId resp = relu(tape, add(tape, matmul(tape, rows, enc.filters[k]), enc.filter_bias[k]));
    banks.push_back(max_over_time(tape, resp));
  }
  return concat(tape, banks, Axis::Cols);
}

namespace {

// Encodes each distinct sequence once per batch.
class TapedFeatureMemo {
 public:
  TapedFeatureMemo(diff::Tape& tape, const TapedEncoder& enc, const EncoderDims& dims)
      : tape_(tape), enc_(enc), dims_(dims) {}
  diff::NodeId get(const TokenSequence& s) {
    auto it = memo_.find(s.ids);
    if (it != memo_.end()) return it->second;
    diff::NodeId id = encode_taped(tape_, enc_, dims_, s);
    memo_.emplace(s.ids, id);
    return id;
  }

 private:
  diff::Tape& tape_;
  const TapedEncoder& enc_;
  const EncoderDims& dims_;
  std::map<std::vector<TokenId>, diff::NodeId> memo_;
};

PairBatchLoss finish_loss(diff::Tape& tape, diff::NodeId features, diff::NodeId classifier,
                          diff::NodeId bias, std::span<const int> labels,
                          const DenseArray* mask, double l2) {
  using namespace diff;
  if (mask) features = dropout_apply(tape, features, *mask);
  NodeId probs = softmax(tape, add(tape, matmul(tape, features, classifier), bias));
  std::vector<Real> w(labels.size(), Real(1) / static_cast<Real>(labels.size()));
  NodeId ce = weighted_nll(tape, probs, labels, w);
  NodeId reg = scale(tape, sum(tape, mul(tape, classifier, classifier)), Real(0.5 * l2));
  return {ce, add(tape, ce, reg)};
}

}  // namespace

PairBatchLoss comparator_loss(diff::Tape& tape, const TapedComparator& c,
                              const ComparatorParams& params,
                              std::span<const TokenSequence* const> first,
                              std::span<const TokenSequence* const> second,
                              std::span<const int> labels, const DenseArray* dropout_mask,
                              double l2) {
  using namespace diff;
  if (first.empty() || first.size() != second.size() || first.size() != labels.size())
    throw UsageError("comparator_loss needs matching, nonempty pair lists");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= params.classes)
      throw UsageError("pair label " + std::to_string(l) + " invalid for a " +
                       std::to_string(params.classes) + "-class comparator");
  TapedFeatureMemo memo(tape, c.encoder, params.encoder.dims);
  std::vector<NodeId> rows;
  rows.reserve(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    const NodeId parts[2] = {memo.get(*first[i]), memo.get(*second[i])};
    rows.push_back(concat(tape, parts, Axis::Cols));
  }
  NodeId features = concat(tape, rows, Axis::Rows);
  return finish_loss(tape, features, c.classifier, c.classifier_bias, labels, dropout_mask, l2);
}

PairBatchLoss binary_disc_loss(diff::Tape& tape, const TapedBinaryDisc& d,
                               const BinaryDiscParams& params,
                               std::span<const TokenSequence* const> samples,
                               std::span<const int> labels, const DenseArray* dropout_mask,
                               double l2) {
  using namespace diff;
  if (samples.empty() || samples.size() != labels.size())
    throw UsageError("binary_disc_loss needs matching, nonempty sample and label lists");
  TapedFeatureMemo memo(tape, d.encoder, params.encoder.dims);
  std::vector<NodeId> rows;
  for (const TokenSequence* s : samples) rows.push_back(memo.get(*s));
  NodeId features = concat(tape, rows, Axis::Rows);
  return finish_loss(tape, features, d.classifier, d.classifier_bias, labels, dropout_mask, l2);
}

DenseArray dropout_mask(std::size_t rows, std::size_t cols, double keep, Rng& rng) {
  if (keep <= 0.0 || keep > 1.0) throw UsageError("dropout keep probability must be in (0, 1]");
  DenseArray mask({rows, cols});
  const Real scale = static_cast<Real>(1.0 / keep);
  for (auto& m : mask.storage()) m = uniform01(rng) < keep ? scale : Real(0);
  return mask;
}

}  // namespace models
SALGAN_NAMESPACE_END
