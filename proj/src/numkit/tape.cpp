#include "vtformer/numkit/tape.hpp"

#include "vtformer/errors.hpp"

namespace vtformer::num {

const Tensor& Var::value() const { return tape_->value(id_); }

Tensor Var::grad() const {
  const Tensor& g = tape_->grad_of(id_);
  if (g.empty()) return Tensor(value().shape());
  return g;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::variable(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = recording();
  return push(std::move(node));
}

Var Tape::param(const ParamStore& store, std::string_view name) {
  Node node;
  node.value = store.at(name).value;
  node.requires_grad = recording();
  if (node.requires_grad) node.param_name = std::string(name);
  return push(std::move(node));
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  if (recording()) {
    for (std::size_t id : inputs) {
      if (nodes_[id].requires_grad) {
        node.requires_grad = true;
        break;
      }
    }
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad = Tensor(node.value.shape());
  return node.grad;
}

std::size_t Tape::backward(Var root) {
  if (root.tape_ != this) throw Error("backward: root belongs to another tape");
  if (nodes_[root.id_].value.size() != 1) {
    throw ShapeError("backward: root must be a scalar, got " +
                     shape_string(nodes_[root.id_].value.shape()));
  }
  for (Node& node : nodes_) node.grad = Tensor();
  if (!nodes_[root.id_].requires_grad) return 0;

  grad_buffer(root.id_)[0] = 1.0;
  std::size_t visited = 0;
  for (std::size_t id = root.id_ + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(*this, id);
    ++visited;
  }
  return visited;
}

void Tape::accumulate_into(ParamStore& store) const {
  for (const Node& node : nodes_) {
    if (node.param_name.empty() || node.grad.empty()) continue;
    Tensor& target = store.at(node.param_name).grad;
    if (target.shape() != node.grad.shape()) {
      throw ShapeError("gradient shape mismatch for '" + node.param_name + "'");
    }
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += node.grad[i];
  }
}

}  // namespace vtformer::num
