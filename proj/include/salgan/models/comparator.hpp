#pragma once

#include <optional>
#include <span>
#include <vector>

#include "salgan/diffcore/array.hpp"
#include "salgan/diffcore/tape.hpp"
#include "salgan/models/sequence.hpp"
#include "salgan/rng.hpp"

SALGAN_NAMESPACE_BEGIN
namespace models {

using diff::DenseArray;

struct EncoderDims {
  std::size_t vocab = 5000;
  std::size_t embed = 64;
  std::vector<std::size_t> widths{2, 3};
  std::vector<std::size_t> counts{100, 200};
  /// When set, convolution windows made only of this token are skipped.
  std::optional<TokenId> pad_id;

  std::size_t feature_size() const;
  std::size_t max_width() const;
};

/// TextCNN sentence encoder: embedding, one convolution bank per width,
/// relu, max-over-time, banks concatenated in width order.
struct TextEncoderParams {
  EncoderDims dims;
  DenseArray embedding;                // V x e
  std::vector<DenseArray> filters;     // per bank: (width * e) x count
  std::vector<DenseArray> filter_bias; // per bank: 1 x count
};

/// Three-way (or, with classes = 2, tie-less) pair classifier over
/// concat(encode(x1), encode(x2)).
struct ComparatorParams {
  TextEncoderParams encoder;
  std::size_t classes = 3;
  DenseArray classifier;       // 2F x classes
  DenseArray classifier_bias;  // 1 x classes

  std::vector<DenseArray*> arrays();
  std::vector<const DenseArray*> arrays() const;
  std::vector<std::string> names() const;
};

/// Single-sample real/fake classifier; class 1 is "real".
struct BinaryDiscParams {
  TextEncoderParams encoder;
  DenseArray classifier;       // F x 2
  DenseArray classifier_bias;  // 1 x 2

  std::vector<DenseArray*> arrays();
  std::vector<const DenseArray*> arrays() const;
  std::vector<std::string> names() const;
};

enum class PairClass : int { Better = 0, Worse = 1, Tie = 2 };

/// Class probabilities for "first is better / worse / indistinguishable".
/// A two-class comparator reports tie = 0.
struct Comparison {
  Real better = 0;
  Real worse = 0;
  Real tie = 0;
};

TextEncoderParams zero_encoder(const EncoderDims& dims);
ComparatorParams zero_comparator(const EncoderDims& dims, std::size_t classes = 3);
BinaryDiscParams zero_binary_disc(const EncoderDims& dims);
/// Truncated-normal(0.1) weights, zero biases.
ComparatorParams init_comparator(const EncoderDims& dims, Rng& rng, std::size_t classes = 3);
BinaryDiscParams init_binary_disc(const EncoderDims& dims, Rng& rng);

/// Sequence as seen by the convolutions: padded to the widest filter.
std::vector<TokenId> padded_tokens(const EncoderDims& dims, const TokenSequence& seq);

std::vector<Real> encode_text(const TextEncoderParams& params, const TokenSequence& seq);

/// Precomputes every token's contribution to every filter offset so that a
/// window response is a sum of table rows. Valid while the params live and
/// stay unchanged.
class EncoderCache {
 public:
  explicit EncoderCache(const TextEncoderParams& params);
  std::vector<Real> encode(const TokenSequence& seq) const;
  void encode_into(const TokenSequence& seq, std::span<Real> out) const;
  const EncoderDims& dims() const { return params_.dims; }

 private:
  const TextEncoderParams& params_;
  // tables_[bank][offset] is V x count
  std::vector<std::vector<std::vector<Real>>> tables_;
};

Comparison compare(const ComparatorParams& params, const TokenSequence& x1,
                   const TokenSequence& x2);
Comparison compare_features(const ComparatorParams& params, std::span<const Real> f1,
                            std::span<const Real> f2);

Real binary_discriminate(const BinaryDiscParams& params, const TokenSequence& x);
Real binary_from_features(const BinaryDiscParams& params, std::span<const Real> f);

// Taped forward passes for training.

struct TapedEncoder {
  diff::NodeId embedding;
  std::vector<diff::NodeId> filters;
  std::vector<diff::NodeId> filter_bias;
};

struct TapedComparator {
  TapedEncoder encoder;
  diff::NodeId classifier, classifier_bias;
  std::vector<diff::NodeId> ids() const;
};

struct TapedBinaryDisc {
  TapedEncoder encoder;
  diff::NodeId classifier, classifier_bias;
  std::vector<diff::NodeId> ids() const;
};

TapedComparator bind(diff::Tape& tape, const ComparatorParams& params);
TapedBinaryDisc bind(diff::Tape& tape, const BinaryDiscParams& params);

/// 1 x F feature row.
diff::NodeId encode_taped(diff::Tape& tape, const TapedEncoder& enc, const EncoderDims& dims,
                          const TokenSequence& seq);

struct PairBatchLoss {
  diff::NodeId cross_entropy;  // mean over pairs
  diff::NodeId objective;      // cross_entropy + 0.5 * l2 * |classifier|^2
};

/// `dropout_mask` (B x 2F, inverted-dropout scaled) is applied to the pair
/// features when given.
PairBatchLoss comparator_loss(diff::Tape& tape, const TapedComparator& c,
                              const ComparatorParams& params,
                              std::span<const TokenSequence* const> first,
                              std::span<const TokenSequence* const> second,
                              std::span<const int> labels, const DenseArray* dropout_mask,
                              double l2);

/// labels: 1 = real, 0 = generated.
PairBatchLoss binary_disc_loss(diff::Tape& tape, const TapedBinaryDisc& d,
                               const BinaryDiscParams& params,
                               std::span<const TokenSequence* const> samples,
                               std::span<const int> labels, const DenseArray* dropout_mask,
                               double l2);

/// Inverted-dropout mask: entries are 0 or 1/keep.
DenseArray dropout_mask(std::size_t rows, std::size_t cols, double keep, Rng& rng);

}  // namespace models
SALGAN_NAMESPACE_END
