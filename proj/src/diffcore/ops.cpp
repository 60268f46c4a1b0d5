#include "salgan/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "salgan/diffcore/kernels.hpp"
#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

namespace {

[[noreturn]] void shape_fail(const char* op, const DenseArray& a, const DenseArray& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                   " and " + shape_string(b.shape()));
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

template <class Fwd, class Deriv>
NodeId unary(Tape& t, NodeId x, Fwd fwd, Deriv deriv_from_output) {
  DenseArray out = t.value(x);
  for (auto& v : out.storage()) v = fwd(v);
  return t.record(std::move(out), {x},
                  [x, deriv_from_output](const Tape& tape, const DenseArray& y,
                                         const DenseArray& gy, GradBuffer& g) {
                    DenseArray* gx = g.get(x);
                    if (!gx) return;
                    const DenseArray& xin = tape.value(x);
                    for (std::size_t i = 0; i < y.size(); ++i)
                      (*gx)[i] += gy[i] * deriv_from_output(xin[i], y[i]);
                  });
}

}  // namespace

NodeId matmul(Tape& t, NodeId a, NodeId b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) shape_fail("matmul", av, bv);
  DenseArray out(matrix_shape(m, n));
  kernels::gemm_acc(av.data(), bv.data(), out.data(), m, k, n);
  return t.record(std::move(out), {a, b},
                  [a, b, m, k, n](const Tape& tape, const DenseArray&, const DenseArray& gy,
                                  GradBuffer& g) {
                    if (DenseArray* ga = g.get(a))
                      kernels::gemm_bt_acc(gy.data(), tape.value(b).data(), ga->data(), m, n, k);
                    if (DenseArray* gb = g.get(b))
                      kernels::gemm_at_acc(tape.value(a).data(), gy.data(), gb->data(), m, k, n);
                  });
}

NodeId add(Tape& t, NodeId a, NodeId b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  const bool same = av.shape() == bv.shape();
  const bool broadcast = !same && bv.rows() == 1 && bv.cols() == av.cols();
  if (!same && !broadcast) shape_fail("add", av, bv);
  DenseArray out = av;
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += same ? bv[i] : bv[i % cols];
  return t.record(std::move(out), {a, b},
                  [a, b, same, cols](const Tape&, const DenseArray&, const DenseArray& gy,
                                     GradBuffer& g) {
                    if (DenseArray* ga = g.get(a))
                      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
                    if (DenseArray* gb = g.get(b))
                      for (std::size_t i = 0; i < gy.size(); ++i)
                        (*gb)[same ? i : i % cols] += gy[i];
                  });
}

NodeId mul(Tape& t, NodeId a, NodeId b) {
  const DenseArray& av = t.value(a);
  const DenseArray& bv = t.value(b);
  if (av.shape() != bv.shape()) shape_fail("multiply", av, bv);
  DenseArray out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record(std::move(out), {a, b},
                  [a, b](const Tape& tape, const DenseArray&, const DenseArray& gy,
                         GradBuffer& g) {
                    if (DenseArray* ga = g.get(a)) {
                      const DenseArray& bv = tape.value(b);
                      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i] * bv[i];
                    }
                    if (DenseArray* gb = g.get(b)) {
                      const DenseArray& av = tape.value(a);
                      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i] += gy[i] * av[i];
                    }
                  });
}

NodeId concat(Tape& t, std::span<const NodeId> parts, Axis axis) {
  if (parts.empty()) throw UsageError("concat needs at least one input");
  std::vector<NodeId> ids(parts.begin(), parts.end());
  const DenseArray& first = t.value(ids[0]);
  std::size_t rows = first.rows(), cols = first.cols();
  std::vector<std::size_t> offsets{0};
  for (std::size_t p = 1; p < ids.size(); ++p) {
    const DenseArray& v = t.value(ids[p]);
    if (axis == Axis::Cols) {
      if (v.rows() != rows) shape_fail("concat", first, v);
      offsets.push_back(cols);
      cols += v.cols();
    } else {
      if (v.cols() != cols) shape_fail("concat", first, v);
      offsets.push_back(rows);
      rows += v.rows();
    }
  }
  DenseArray out(matrix_shape(rows, cols));
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const DenseArray& v = t.value(ids[p]);
    for (std::size_t r = 0; r < v.rows(); ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) {
        if (axis == Axis::Cols) out.at(r, offsets[p] + c) = v.at(r, c);
        else out.at(offsets[p] + r, c) = v.at(r, c);
      }
  }
  return t.record(std::move(out), ids,
                  [ids, offsets, axis](const Tape&, const DenseArray&, const DenseArray& gy,
                                       GradBuffer& g) {
                    for (std::size_t p = 0; p < ids.size(); ++p) {
                      DenseArray* gp = g.get(ids[p]);
                      if (!gp) continue;
                      for (std::size_t r = 0; r < gp->rows(); ++r)
                        for (std::size_t c = 0; c < gp->cols(); ++c)
                          gp->at(r, c) += axis == Axis::Cols ? gy.at(r, offsets[p] + c)
                                                             : gy.at(offsets[p] + r, c);
                    }
                  });
}

NodeId tanh(Tape& t, NodeId x) {
  return unary(
      t, x, [](Real v) { return std::tanh(v); },
      [](Real, Real y) { return Real(1) - y * y; });
}

NodeId sigmoid(Tape& t, NodeId x) {
  return unary(
      t, x, [](Real v) { return Real(1) / (Real(1) + std::exp(-v)); },
      [](Real, Real y) { return y * (Real(1) - y); });
}

NodeId relu(Tape& t, NodeId x) {
  return unary(
      t, x, [](Real v) { return v > Real(0) ? v : Real(0); },
      [](Real xin, Real) { return xin > Real(0) ? Real(1) : Real(0); });
}

NodeId log(Tape& t, NodeId x) {
  return unary(
      t, x, [](Real v) { return std::log(std::max(v, kProbFloor)); },
      [](Real xin, Real) { return xin > kProbFloor ? Real(1) / xin : Real(0); });
}

DenseArray softmax_rows(const DenseArray& x) {
  DenseArray out = x;
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Real* row = out.data() + r * cols;
    Real mx = *std::max_element(row, row + cols);
    Real total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      total += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= total;
  }
  return out;
}

NodeId softmax(Tape& t, NodeId x) {
  return t.record(softmax_rows(t.value(x)), {x},
                  [x](const Tape&, const DenseArray& y, const DenseArray& gy, GradBuffer& g) {
                    DenseArray* gx = g.get(x);
                    if (!gx) return;
                    const std::size_t cols = y.cols();
                    for (std::size_t r = 0; r < y.rows(); ++r) {
                      Real dot = 0;
                      for (std::size_t c = 0; c < cols; ++c) dot += gy.at(r, c) * y.at(r, c);
                      for (std::size_t c = 0; c < cols; ++c)
                        gx->at(r, c) += y.at(r, c) * (gy.at(r, c) - dot);
                    }
                  });
}

NodeId gather(Tape& t, NodeId table, std::span<const int> ids) {
  const DenseArray& tv = t.value(table);
  const std::size_t cols = tv.cols(), rows = tv.rows();
  if (ids.empty()) throw UsageError("gather needs at least one id");
  DenseArray out(matrix_shape(ids.size(), cols));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows) {
      throw UsageError("gather id " + std::to_string(ids[i]) + " out of range for table " +
                       shape_string(tv.shape()));
    }
    std::copy_n(tv.data() + ids[i] * cols, cols, out.data() + i * cols);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return t.record(std::move(out), {table},
                  [table, idx = std::move(idx), cols](const Tape&, const DenseArray&,
                                                      const DenseArray& gy, GradBuffer& g) {
                    DenseArray* gt = g.get(table);
                    if (!gt) return;
                    for (std::size_t i = 0; i < idx.size(); ++i) {
                      Real* dst = gt->data() + idx[i] * cols;
                      const Real* src = gy.data() + i * cols;
                      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                    }
                  });
}

NodeId max_over_time(Tape& t, NodeId x) {
  const DenseArray& xv = t.value(x);
  const std::size_t rows = xv.rows(), cols = xv.cols();
  DenseArray out(matrix_shape(1, cols));
  std::vector<std::size_t> arg(cols, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    Real best = xv.at(0, c);
    for (std::size_t r = 1; r < rows; ++r)
      if (xv.at(r, c) > best) {
        best = xv.at(r, c);
        arg[c] = r;
      }
    out[c] = best;
  }
  return t.record(std::move(out), {x},
                  [x, arg = std::move(arg)](const Tape&, const DenseArray&, const DenseArray& gy,
                                            GradBuffer& g) {
                    DenseArray* gx = g.get(x);
                    if (!gx) return;
                    for (std::size_t c = 0; c < arg.size(); ++c) gx->at(arg[c], c) += gy[c];
                  });
}

NodeId dropout_apply(Tape& t, NodeId x, const DenseArray& mask) {
  const DenseArray& xv = t.value(x);
  if (xv.size() != mask.size()) shape_fail("dropout", xv, mask);
  DenseArray out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return t.record(std::move(out), {x},
                  [x, mask](const Tape&, const DenseArray&, const DenseArray& gy, GradBuffer& g) {
                    if (DenseArray* gx = g.get(x))
                      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i] * mask[i];
                  });
}

NodeId reshape(Tape& t, NodeId x, Shape shape) {
  DenseArray out = t.value(x);
  out.reshape(std::move(shape));
  return t.record(std::move(out), {x},
                  [x](const Tape&, const DenseArray&, const DenseArray& gy, GradBuffer& g) {
                    if (DenseArray* gx = g.get(x))
                      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i];
                  });
}

NodeId slice_cols(Tape& t, NodeId x, std::size_t begin, std::size_t end) {
  const DenseArray& xv = t.value(x);
  if (begin >= end || end > xv.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_string(xv.shape()));
  }
  const std::size_t rows = xv.rows(), width = end - begin;
  DenseArray out(matrix_shape(rows, width));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out.at(r, c) = xv.at(r, begin + c);
  return t.record(std::move(out), {x},
                  [x, begin](const Tape&, const DenseArray&, const DenseArray& gy,
                             GradBuffer& g) {
                    DenseArray* gx = g.get(x);
                    if (!gx) return;
                    for (std::size_t r = 0; r < gy.rows(); ++r)
                      for (std::size_t c = 0; c < gy.cols(); ++c)
                        gx->at(r, begin + c) += gy.at(r, c);
                  });
}

NodeId sum(Tape& t, NodeId x) {
  const DenseArray& xv = t.value(x);
  Real total = 0;
  for (Real v : xv.values()) total += v;
  return t.record(DenseArray::scalar(total), {x},
                  [x](const Tape&, const DenseArray&, const DenseArray& gy, GradBuffer& g) {
                    if (DenseArray* gx = g.get(x))
                      for (auto& v : gx->storage()) v += gy[0];
                  });
}

NodeId scale(Tape& t, NodeId x, Real factor) {
  DenseArray out = t.value(x);
  for (auto& v : out.storage()) v *= factor;
  return t.record(std::move(out), {x},
                  [x, factor](const Tape&, const DenseArray&, const DenseArray& gy,
                              GradBuffer& g) {
                    if (DenseArray* gx = g.get(x))
                      for (std::size_t i = 0; i < gy.size(); ++i) (*gx)[i] += gy[i] * factor;
                  });
}

NodeId weighted_nll(Tape& t, NodeId probs, std::span<const int> targets,
                    std::span<const Real> weights) {
  const DenseArray& pv = t.value(probs);
  const std::size_t rows = pv.rows(), cols = pv.cols();
  if (targets.size() != rows || weights.size() != rows) {
    throw ShapeError("weighted_nll: " + std::to_string(targets.size()) + " targets and " +
                     std::to_string(weights.size()) + " weights for probabilities " +
                     shape_string(pv.shape()));
  }
  Real total = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= cols)
      throw UsageError("target index " + std::to_string(targets[r]) + " out of range");
    total -= weights[r] * std::log(std::max(pv.at(r, targets[r]), kProbFloor));
  }
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<Real> wt(weights.begin(), weights.end());
  return t.record(DenseArray::scalar(total), {probs},
                  [probs, tg = std::move(tg), wt = std::move(wt)](
                      const Tape& tape, const DenseArray&, const DenseArray& gy, GradBuffer& g) {
                    DenseArray* gp = g.get(probs);
                    if (!gp) return;
                    const DenseArray& pv = tape.value(probs);
                    for (std::size_t r = 0; r < tg.size(); ++r) {
                      const Real p = pv.at(r, tg[r]);
                      if (p > kProbFloor) gp->at(r, tg[r]) -= gy[0] * wt[r] / p;
                    }
                  });
}

double cross_entropy(const DenseArray& probs, std::size_t target) {
  if (target >= probs.size()) {
    throw UsageError("cross_entropy target " + std::to_string(target) + " out of range for " +
                     shape_string(probs.shape()));
  }
  return -std::log(std::max(static_cast<double>(probs[target]), static_cast<double>(kProbFloor)));
}

OpKind parse_op_kind(std::string_view name) {
  struct Entry {
    std::string_view name;
    OpKind kind;
  };
  static constexpr Entry table[] = {
      {"matmul", OpKind::MatMul},
      {"add", OpKind::Add},
      {"elementwise-multiply", OpKind::Multiply},
      {"concat", OpKind::Concat},
      {"tanh", OpKind::Tanh},
      {"sigmoid", OpKind::Sigmoid},
      {"relu", OpKind::Relu},
      {"softmax-last-axis", OpKind::Softmax},
      {"log", OpKind::Log},
      {"embedding-gather", OpKind::EmbeddingGather},
      {"max-over-time", OpKind::MaxOverTime},
      {"dropout-mask-apply", OpKind::DropoutMaskApply},
  };
  for (const auto& e : table)
    if (e.name == name) return e.kind;
  throw UsageError("unknown primitive kind '" + std::string(name) + "'");
}

NodeId primitive_forward(Tape& t, OpKind kind, std::span<const NodeId> in) {
  auto need = [&](std::size_t n) {
    if (in.size() != n)
      throw UsageError("primitive expects " + std::to_string(n) + " inputs, got " +
                       std::to_string(in.size()));
  };
  switch (kind) {
    case OpKind::MatMul: need(2); return matmul(t, in[0], in[1]);
    case OpKind::Add: need(2); return add(t, in[0], in[1]);
    case OpKind::Multiply: need(2); return mul(t, in[0], in[1]);
    case OpKind::Concat: return concat(t, in);
    case OpKind::Tanh: need(1); return tanh(t, in[0]);
    case OpKind::Sigmoid: need(1); return sigmoid(t, in[0]);
    case OpKind::Relu: need(1); return relu(t, in[0]);
    case OpKind::Softmax: need(1); return softmax(t, in[0]);
    case OpKind::Log: need(1); return log(t, in[0]);
    case OpKind::EmbeddingGather: {
      need(2);
      std::vector<int> ids;
      for (Real v : t.value(in[1]).values()) ids.push_back(static_cast<int>(std::lround(v)));
      return gather(t, in[0], ids);
    }
    case OpKind::MaxOverTime: need(1); return max_over_time(t, in[0]);
    case OpKind::DropoutMaskApply: {
      need(2);
      DenseArray mask = t.value(in[1]);
      return dropout_apply(t, in[0], mask);
    }
  }
  throw UsageError("unknown primitive kind");
}

}  // namespace diff
SALGAN_NAMESPACE_END
