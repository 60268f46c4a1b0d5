#pragma once

#include <span>
#include <string>
#include <vector>

#include "salgan/diffcore/array.hpp"
#include "salgan/diffcore/tape.hpp"
#include "salgan/models/sequence.hpp"
#include "salgan/rng.hpp"

SALGAN_NAMESPACE_BEGIN
namespace models {

using diff::DenseArray;

struct GeneratorDims {
  std::size_t vocab = 5000;
  std::size_t embed = 32;
  std::size_t hidden = 32;
  friend bool operator==(const GeneratorDims&, const GeneratorDims&) = default;
};

/// Single-layer LSTM language model. Gate blocks are packed along the
/// columns in the order input, forget, output, candidate.
struct GeneratorParams {
  GeneratorDims dims;
  DenseArray embedding;          // V x e
  DenseArray input_weights;      // e x 4h
  DenseArray recurrent_weights;  // h x 4h
  DenseArray gate_bias;          // 1 x 4h
  DenseArray output_weights;     // h x V
  DenseArray output_bias;        // 1 x V

  std::vector<DenseArray*> arrays();
  std::vector<const DenseArray*> arrays() const;
  static const std::vector<std::string>& names();
  bool all_finite() const;
  friend bool operator==(const GeneratorParams&, const GeneratorParams&) = default;
};

GeneratorParams zero_generator(const GeneratorDims& dims);
/// Every element drawn from N(0, 1); used for the synthetic oracle.
GeneratorParams normal_generator(const GeneratorDims& dims, Rng& rng);
/// Truncated normal (|x| <= 2 sigma) with sigma = scale; trainable models.
GeneratorParams truncated_normal_generator(const GeneratorDims& dims, Rng& rng,
                                           double scale = 0.1);

struct LstmState {
  std::vector<Real> h;
  std::vector<Real> c;
};

LstmState initial_state(const GeneratorDims& dims);

struct StepOutput {
  DenseArray logits;  // 1 x V, pre-softmax
  LstmState state;
};

StepOutput lstm_step(const GeneratorParams& params, TokenId token, const LstmState& state);

/// Allocation-free stepping for hot loops. Not thread-safe; use one per thread.
class LstmRunner {
 public:
  explicit LstmRunner(const GeneratorParams& params);
  /// Advances `state` by one input token and writes next-token probabilities.
  void step(TokenId token, LstmState& state, std::span<Real> probs);
  /// Advances `state` without computing the output distribution.
  void advance(TokenId token, LstmState& state);
  /// Samples `count` tokens starting from `state` after input `last`;
  /// appends them to `out` and returns the sum of their log-probabilities.
  double rollout(TokenId last, LstmState state, std::size_t count, Rng& rng,
                 std::vector<TokenId>& out);
  const GeneratorParams& params() const { return params_; }

 private:
  const GeneratorParams& params_;
  std::vector<Real> gates_;
  std::vector<Real> logits_;
  std::vector<Real> probs_;
};

/// Draws a token from a probability row by inverse CDF.
TokenId sample_categorical(std::span<const Real> probs, Rng& rng);

struct SampledSequence {
  TokenSequence sequence;
  std::vector<Real> log_probs;
};

/// Fixed-length ancestral sampling from the start token.
SampledSequence sample_sequence(const GeneratorParams& params, std::size_t max_len, Rng& rng);

/// Teacher-forced mean per-token negative log-likelihood, in nats.
double sequence_nll(const GeneratorParams& params, const TokenSequence& seq);

// Taped forward pass for training.

struct TapedGenerator {
  diff::NodeId embedding, input_weights, recurrent_weights, gate_bias, output_weights,
      output_bias;
  std::vector<diff::NodeId> ids() const {
    return {embedding, input_weights, recurrent_weights, gate_bias, output_weights, output_bias};
  }
};

TapedGenerator bind(diff::Tape& tape, const GeneratorParams& params);

/// sum over (b, t) of weights[b][t] * -log p(batch[b][t] | batch[b][0..t-1]).
/// All sequences in the batch must have the same length.
diff::NodeId weighted_sequence_nll(diff::Tape& tape, const TapedGenerator& g,
                                   const GeneratorDims& dims,
                                   std::span<const TokenSequence> batch,
                                   std::span<const std::vector<Real>> weights);

std::vector<DenseArray> collect_gradients(const diff::Gradients& grads, const TapedGenerator& g);

}  // namespace models
SALGAN_NAMESPACE_END
