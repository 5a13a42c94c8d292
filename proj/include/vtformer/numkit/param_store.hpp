#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "vtformer/numkit/tensor.hpp"

namespace vtformer::num {

struct ParamEntry {
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
};

// Named trainable tensors plus their gradient accumulators and Adam state.
// Iteration order is lexicographic by name, which keeps every traversal
// (checkpointing, counting, optimizer updates) deterministic.
class ParamStore {
 public:
  using Map = std::map<std::string, ParamEntry, std::less<>>;

  ParamEntry& add(std::string name, Tensor init);

  bool contains(std::string_view name) const;
  ParamEntry& at(std::string_view name);
  const ParamEntry& at(std::string_view name) const;

  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }
  Map::iterator begin() { return entries_.begin(); }
  Map::iterator end() { return entries_.end(); }
  std::size_t tensor_count() const { return entries_.size(); }

  // Total number of trainable scalars.
  std::size_t scalar_count() const;

  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }
  void increment_step() { ++step_count_; }

  void zero_grad();

 private:
  Map entries_;
  std::uint64_t step_count_ = 0;
};

struct AdamOptions {
  double lr = 0.01;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam with decoupled weight decay. Throws NumericError naming
// the first parameter whose gradient holds a NaN/Inf; in that case no value is
// modified. Gradients are zeroed and step_count advanced on success.
void adam_step(ParamStore& store, const AdamOptions& options);

}  // namespace vtformer::num
