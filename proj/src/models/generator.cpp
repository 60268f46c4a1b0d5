#include "salgan/models/generator.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "salgan/diffcore/ops.hpp"
#include "salgan/errors.hpp"
#include "salgan/models/init.hpp"

SALGAN_NAMESPACE_BEGIN
namespace models {

namespace {

inline Real sigm(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

void check_token(const GeneratorDims& dims, TokenId token) {
  if (token < 0 || static_cast<std::size_t>(token) >= dims.vocab) {
    throw UsageError("token " + std::to_string(token) + " outside vocabulary of size " +
                     std::to_string(dims.vocab));
  }
}

// gates (4h) -> next state, in place.
void apply_gates(std::span<const Real> gates, LstmState& s, std::size_t h) {
  for (std::size_t j = 0; j < h; ++j) {
    const Real i = sigm(gates[j]);
    const Real f = sigm(gates[h + j]);
    const Real o = sigm(gates[2 * h + j]);
    const Real g = std::tanh(gates[3 * h + j]);
    s.c[j] = f * s.c[j] + i * g;
    s.h[j] = o * std::tanh(s.c[j]);
  }
}

using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<const Eigen::Matrix<Real, 1, Eigen::Dynamic>>;
using OutMap = Eigen::Map<Eigen::Matrix<Real, 1, Eigen::Dynamic>>;

MatMap as_matrix(const DenseArray& a) {
  return MatMap(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

void compute_gates(const GeneratorParams& p, TokenId token, const LstmState& s,
                   std::span<Real> gates) {
  const auto e = static_cast<Eigen::Index>(p.dims.embed);
  const auto h4 = static_cast<Eigen::Index>(4 * p.dims.hidden);
  const VecMap x(p.embedding.data() + static_cast<std::size_t>(token) * p.dims.embed, e);
  const VecMap h(s.h.data(), static_cast<Eigen::Index>(p.dims.hidden));
  OutMap out(gates.data(), h4);
  out.noalias() = VecMap(p.gate_bias.data(), h4);
  out.noalias() += x * as_matrix(p.input_weights);
  out.noalias() += h * as_matrix(p.recurrent_weights);
}

void compute_logits(const GeneratorParams& p, const LstmState& s, std::span<Real> logits) {
  const auto v = static_cast<Eigen::Index>(p.dims.vocab);
  const VecMap h(s.h.data(), static_cast<Eigen::Index>(p.dims.hidden));
  OutMap out(logits.data(), v);
  out.noalias() = VecMap(p.output_bias.data(), v);
  out.noalias() += h * as_matrix(p.output_weights);
}

void softmax_inplace(std::span<const Real> logits, std::span<Real> probs) {
  const auto n = static_cast<Eigen::Index>(logits.size());
  const VecMap in(logits.data(), n);
  OutMap out(probs.data(), n);
  out = (in.array() - in.maxCoeff()).exp().matrix();
  out *= Real(1) / out.sum();
}

}  // namespace

std::vector<DenseArray*> GeneratorParams::arrays() {
  return {&embedding, &input_weights, &recurrent_weights, &gate_bias, &output_weights,
          &output_bias};
}

std::vector<const DenseArray*> GeneratorParams::arrays() const {
  return {&embedding, &input_weights, &recurrent_weights, &gate_bias, &output_weights,
          &output_bias};
}

const std::vector<std::string>& GeneratorParams::names() {
  static const std::vector<std::string> n{"embedding",      "input_weights",
                                          "recurrent_weights", "gate_bias",
                                          "output_weights", "output_bias"};
  return n;
}

bool GeneratorParams::all_finite() const {
  for (const DenseArray* a : arrays())
    if (!a->all_finite()) return false;
  return true;
}

GeneratorParams zero_generator(const GeneratorDims& d) {
  if (d.vocab < 2 || d.embed == 0 || d.hidden == 0)
    throw UsageError("generator needs vocab >= 2 and positive embed/hidden sizes");
  GeneratorParams p;
  p.dims = d;
  p.embedding = DenseArray({d.vocab, d.embed});
  p.input_weights = DenseArray({d.embed, 4 * d.hidden});
  p.recurrent_weights = DenseArray({d.hidden, 4 * d.hidden});
  p.gate_bias = DenseArray({1, 4 * d.hidden});
  p.output_weights = DenseArray({d.hidden, d.vocab});
  p.output_bias = DenseArray({1, d.vocab});
  return p;
}

GeneratorParams normal_generator(const GeneratorDims& dims, Rng& rng) {
  GeneratorParams p = zero_generator(dims);
  for (DenseArray* a : p.arrays()) fill_normal(*a, rng);
  return p;
}

GeneratorParams truncated_normal_generator(const GeneratorDims& dims, Rng& rng, double scale) {
  GeneratorParams p = zero_generator(dims);
  for (DenseArray* a : p.arrays()) fill_truncated_normal(*a, rng, scale);
  return p;
}

LstmState initial_state(const GeneratorDims& dims) {
  return {std::vector<Real>(dims.hidden, Real(0)), std::vector<Real>(dims.hidden, Real(0))};
}

StepOutput lstm_step(const GeneratorParams& params, TokenId token, const LstmState& state) {
  check_token(params.dims, token);
  if (state.h.size() != params.dims.hidden || state.c.size() != params.dims.hidden)
    throw ShapeError("LSTM state does not match hidden size " +
                     std::to_string(params.dims.hidden));
  std::vector<Real> gates(4 * params.dims.hidden);
  StepOutput out{DenseArray({1, params.dims.vocab}), state};
  compute_gates(params, token, state, gates);
  apply_gates(gates, out.state, params.dims.hidden);
  compute_logits(params, out.state, out.logits.storage());
  return out;
}

LstmRunner::LstmRunner(const GeneratorParams& params)
    : params_(params),
      gates_(4 * params.dims.hidden),
      logits_(params.dims.vocab),
      probs_(params.dims.vocab) {}

void LstmRunner::step(TokenId token, LstmState& state, std::span<Real> probs) {
  compute_gates(params_, token, state, gates_);
  apply_gates(gates_, state, params_.dims.hidden);
  compute_logits(params_, state, logits_);
  softmax_inplace(logits_, probs);
}

void LstmRunner::advance(TokenId token, LstmState& state) {
  compute_gates(params_, token, state, gates_);
  apply_gates(gates_, state, params_.dims.hidden);
}

double LstmRunner::rollout(TokenId last, LstmState state, std::size_t count, Rng& rng,
                           std::vector<TokenId>& out) {
  double logp = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    step(last, state, probs_);
    last = sample_categorical(probs_, rng);
    logp += std::log(std::max(probs_[last], kProbFloor));
    out.push_back(last);
  }
  return logp;
}

TokenId sample_categorical(std::span<const Real> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] <= Real(0)) continue;
    acc += probs[j];
    last_positive = j;
    if (u < acc) return static_cast<TokenId>(j);
  }
  return static_cast<TokenId>(last_positive);
}

SampledSequence sample_sequence(const GeneratorParams& params, std::size_t max_len, Rng& rng) {
  if (max_len == 0) throw UsageError("sample_sequence needs max_len >= 1");
  LstmRunner runner(params);
  LstmState state = initial_state(params.dims);
  std::vector<Real> probs(params.dims.vocab);
  SampledSequence out;
  out.sequence.ids.reserve(max_len);
  out.log_probs.reserve(max_len);
  TokenId last = kStartToken;
  for (std::size_t t = 0; t < max_len; ++t) {
    runner.step(last, state, probs);
    last = sample_categorical(probs, rng);
    out.sequence.ids.push_back(last);
    out.log_probs.push_back(std::log(std::max(probs[last], kProbFloor)));
  }
  return out;
}

double sequence_nll(const GeneratorParams& params, const TokenSequence& seq) {
  if (seq.empty()) throw UsageError("sequence_nll of an empty sequence");
  for (TokenId id : seq.ids) check_token(params.dims, id);
  LstmRunner runner(params);
  LstmState state = initial_state(params.dims);
  std::vector<Real> probs(params.dims.vocab);
  double total = 0.0;
  TokenId last = kStartToken;
  for (TokenId y : seq.ids) {
    runner.step(last, state, probs);
    total -= std::log(std::max(static_cast<double>(probs[y]), static_cast<double>(kProbFloor)));
    last = y;
  }
  return total / static_cast<double>(seq.size());
}

TapedGenerator bind(diff::Tape& tape, const GeneratorParams& p) {
  return {tape.parameter(p.embedding),      tape.parameter(p.input_weights),
          tape.parameter(p.recurrent_weights), tape.parameter(p.gate_bias),
          tape.parameter(p.output_weights), tape.parameter(p.output_bias)};
}

diff::NodeId weighted_sequence_nll(diff::Tape& tape, const TapedGenerator& g,
                                   const GeneratorDims& dims,
                                   std::span<const TokenSequence> batch,
                                   std::span<const std::vector<Real>> weights) {
  using namespace diff;
  if (batch.empty()) throw UsageError("weighted_sequence_nll of an empty batch");
  if (weights.size() != batch.size()) throw ShapeError("one weight row per sequence required");
  const std::size_t len = batch[0].size();
  if (len == 0) throw UsageError("weighted_sequence_nll of empty sequences");
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].size() != len || weights[b].size() != len)
      throw ShapeError("batch sequences and weight rows must share one length");
    for (TokenId id : batch[b].ids) check_token(dims, id);
  }
  const std::size_t B = batch.size(), h = dims.hidden;
  NodeId hs = tape.constant(DenseArray({B, h}));
  NodeId cs = tape.constant(DenseArray({B, h}));
  std::vector<int> inputs(B, kStartToken), targets(B);
  std::vector<Real> w(B);
  NodeId total = 0;
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      targets[b] = batch[b][t];
      w[b] = weights[b][t];
    }
    NodeId x = gather(tape, g.embedding, inputs);
    NodeId z = add(tape, add(tape, matmul(tape, x, g.input_weights),
                             matmul(tape, hs, g.recurrent_weights)),
                   g.gate_bias);
    NodeId ig = sigmoid(tape, slice_cols(tape, z, 0, h));
    NodeId fg = sigmoid(tape, slice_cols(tape, z, h, 2 * h));
    NodeId og = sigmoid(tape, slice_cols(tape, z, 2 * h, 3 * h));
    NodeId cand = diff::tanh(tape, slice_cols(tape, z, 3 * h, 4 * h));
    cs = add(tape, mul(tape, fg, cs), mul(tape, ig, cand));
    hs = mul(tape, og, diff::tanh(tape, cs));
    NodeId probs = softmax(tape, add(tape, matmul(tape, hs, g.output_weights), g.output_bias));
    NodeId step_nll = weighted_nll(tape, probs, targets, w);
    total = t == 0 ? step_nll : add(tape, total, step_nll);
    inputs = targets;
  }
  return total;
}

std::vector<DenseArray> collect_gradients(const diff::Gradients& grads, const TapedGenerator& g) {
  std::vector<DenseArray> out;
  for (auto id : g.ids()) out.push_back(grads[id]);
  return out;
}

}  // namespace models
SALGAN_NAMESPACE_END
