#include "salgan/diffcore/tape.hpp"

#include "salgan/errors.hpp"

SALGAN_NAMESPACE_BEGIN
namespace diff {

GradBuffer::GradBuffer(const Tape& tape)
    : tape_(tape), grads_(tape.size()), allocated_(tape.size(), false) {}

DenseArray* GradBuffer::get(NodeId id) {
  if (!tape_.requires_grad(id)) return nullptr;
  if (!allocated_[id]) {
    grads_[id] = DenseArray::zeros_like(tape_.value(id));
    allocated_[id] = true;
  }
  return &grads_[id];
}

DenseArray* GradBuffer::find(NodeId id) { return allocated_[id] ? &grads_[id] : nullptr; }

const DenseArray& Gradients::operator[](NodeId param) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i] == param) return grads_[i];
  throw UsageError("node " + std::to_string(param) + " is not a parameter of this tape");
}

NodeId Tape::parameter(DenseArray value) {
  nodes_.push_back({std::move(value), {}, {}, true});
  params_.push_back(nodes_.size() - 1);
  return nodes_.size() - 1;
}

NodeId Tape::constant(DenseArray value) {
  nodes_.push_back({std::move(value), {}, {}, false});
  return nodes_.size() - 1;
}

NodeId Tape::record(DenseArray value, std::vector<NodeId> inputs, BackwardFn fn) {
  bool needs = false;
  for (auto in : inputs) {
    if (in >= nodes_.size()) throw UsageError("tape input refers to a future node");
    needs = needs || nodes_[in].requires_grad;
  }
  Node node{std::move(value), std::move(inputs), {}, needs};
  if (needs) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Gradients Tape::backward(NodeId loss) const {
  if (loss >= nodes_.size()) throw UsageError("loss node is not on this tape");
  if (nodes_[loss].value.size() != 1) {
    throw UsageError("backward needs a scalar loss, got shape " +
                     shape_string(nodes_[loss].value.shape()));
  }
  GradBuffer buf(*this);
  if (DenseArray* seed = buf.get(loss)) (*seed)[0] = Real(1);
  for (NodeId id = loss + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.backward) continue;
    DenseArray* g = buf.find(id);
    if (!g) continue;
    node.backward(*this, node.value, *g, buf);
  }
  std::vector<DenseArray> grads;
  grads.reserve(params_.size());
  for (NodeId p : params_) {
    DenseArray* g = buf.find(p);
    grads.push_back(g ? *g : DenseArray::zeros_like(nodes_[p].value));
  }
  return Gradients(params_, std::move(grads));
}

}  // namespace diff
SALGAN_NAMESPACE_END
