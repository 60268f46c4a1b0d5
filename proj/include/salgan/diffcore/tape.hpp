#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "salgan/diffcore/array.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

using NodeId = std::size_t;

class Tape;

/// Gradient accumulators used during one reverse pass. Buffers are allocated
/// lazily and only for nodes that depend on a parameter.
class GradBuffer {
 public:
  explicit GradBuffer(const Tape& tape);
  /// Accumulator for `id`, or nullptr when `id` needs no gradient.
  DenseArray* get(NodeId id);
  DenseArray* find(NodeId id);

 private:
  const Tape& tape_;
  std::vector<DenseArray> grads_;
  std::vector<bool> allocated_;
};

/// Gradients of a scalar loss with respect to every parameter leaf.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<NodeId> params, std::vector<DenseArray> grads)
      : params_(std::move(params)), grads_(std::move(grads)) {}

  const DenseArray& operator[](NodeId param) const;
  const std::vector<NodeId>& parameters() const { return params_; }

 private:
  std::vector<NodeId> params_;
  std::vector<DenseArray> grads_;
};

/// Records primitive operations in creation order, which is a topological
/// order. backward() is const: the same tape can be differentiated repeatedly.
/// Single owner, single thread.
class Tape {
 public:
  using BackwardFn = std::function<void(const Tape&, const DenseArray& out_value,
                                        const DenseArray& out_grad, GradBuffer&)>;

  NodeId parameter(DenseArray value);
  NodeId constant(DenseArray value);
  NodeId record(DenseArray value, std::vector<NodeId> inputs, BackwardFn fn);

  const DenseArray& value(NodeId id) const { return nodes_.at(id).value; }
  bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeId>& parameters() const { return params_; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }

  Gradients backward(NodeId loss) const;

 private:
  struct Node {
    DenseArray value;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<NodeId> params_;
};

}  // namespace diff
SALGAN_NAMESPACE_END
