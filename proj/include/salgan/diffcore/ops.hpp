#pragma once

#include <span>
#include <string_view>

#include "salgan/diffcore/tape.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

// Differentiable primitives. Each evaluates eagerly, records itself on the
// tape, and throws ShapeError (naming both shapes) on non-conforming input.

NodeId matmul(Tape& t, NodeId a, NodeId b);
/// Elementwise sum; `b` may also be a 1 x cols row broadcast over a's rows.
NodeId add(Tape& t, NodeId a, NodeId b);
NodeId mul(Tape& t, NodeId a, NodeId b);

enum class Axis { Rows, Cols };
NodeId concat(Tape& t, std::span<const NodeId> parts, Axis axis = Axis::Cols);

NodeId tanh(Tape& t, NodeId x);
NodeId sigmoid(Tape& t, NodeId x);
NodeId relu(Tape& t, NodeId x);
/// Softmax over the last axis of every row.
NodeId softmax(Tape& t, NodeId x);
/// Natural log of max(x, kProbFloor).
NodeId log(Tape& t, NodeId x);
/// Rows of `table` selected by `ids`: result is ids.size() x table.cols().
NodeId gather(Tape& t, NodeId table, std::span<const int> ids);
/// Column-wise maximum over rows: n x c -> 1 x c.
NodeId max_over_time(Tape& t, NodeId x);
/// x * mask, with a constant mask (already scaled for inverted dropout).
NodeId dropout_apply(Tape& t, NodeId x, const DenseArray& mask);

NodeId reshape(Tape& t, NodeId x, Shape shape);
NodeId slice_cols(Tape& t, NodeId x, std::size_t begin, std::size_t end);
NodeId sum(Tape& t, NodeId x);
NodeId scale(Tape& t, NodeId x, Real factor);
/// sum_i weights[i] * -log(max(probs[i, targets[i]], kProbFloor)).
NodeId weighted_nll(Tape& t, NodeId probs, std::span<const int> targets,
                    std::span<const Real> weights);

enum class OpKind {
  MatMul,
  Add,
  Multiply,
  Concat,
  Tanh,
  Sigmoid,
  Relu,
  Softmax,
  Log,
  EmbeddingGather,
  MaxOverTime,
  DropoutMaskApply,
};

/// Parses names such as "matmul" or "softmax-last-axis"; UsageError otherwise.
OpKind parse_op_kind(std::string_view name);

/// Generic dispatch. EmbeddingGather takes (table, ids) where ids holds
/// integral values; DropoutMaskApply takes (x, mask).
NodeId primitive_forward(Tape& t, OpKind kind, std::span<const NodeId> inputs);

// Tape-free helpers.
DenseArray softmax_rows(const DenseArray& x);
/// -log(max(probs[target], kProbFloor)) over a single simplex row.
double cross_entropy(const DenseArray& probs, std::size_t target);

}  // namespace diff
SALGAN_NAMESPACE_END
