#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "vtformer/numkit/param_store.hpp"
#include "vtformer/numkit/tensor.hpp"

namespace vtformer::num {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient accumulated by the last backward pass (zeros if none reached it).
  Tensor grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class GradMode { kRecord, kInference };

// Append-only record of differentiable operations. Nodes are stored in
// creation order, which is a topological order, so a reverse sweep visits
// every op once after all of its consumers.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  explicit Tape(GradMode mode = GradMode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == GradMode::kRecord; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Differentiable leaf not backed by a parameter store.
  Var variable(Tensor value);
  // Differentiable leaf initialised from store[name]; accumulate_into() adds
  // its gradient back to the store.
  Var param(const ParamStore& store, std::string_view name);

  // Reverse sweep from a 1x1 root. Returns the number of ops whose backward
  // function ran.
  std::size_t backward(Var root);

  // Adds gradients of every param() leaf into store[name].grad.
  void accumulate_into(ParamStore& store) const;

  // Op-implementation interface.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
  // Gradient buffer for node `id`, allocated as zeros on first use.
  Tensor& grad_buffer(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    std::string param_name;
  };

  Var push(Node node);

  GradMode mode_;
  std::vector<Node> nodes_;
};

}  // namespace vtformer::num
