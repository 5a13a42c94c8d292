#include "vtformer/numkit/param_store.hpp"

#include <cmath>

#include "vtformer/errors.hpp"

namespace vtformer::num {

ParamEntry& ParamStore::add(std::string name, Tensor init) {
  if (entries_.contains(name)) {
    throw ConfigError("duplicate parameter name '" + name + "'");
  }
  const Shape shape = init.shape();
  ParamEntry entry{std::move(init), Tensor(shape), Tensor(shape), Tensor(shape)};
  return entries_.emplace(std::move(name), std::move(entry)).first->second;
}

bool ParamStore::contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

ParamEntry& ParamStore::at(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

const ParamEntry& ParamStore::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
  }
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, entry] : entries_) n += entry.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, entry] : entries_) entry.grad.fill(0.0);
}

void adam_step(ParamStore& store, const AdamOptions& options) {
  for (const auto& [name, entry] : store) {
    if (!entry.grad.all_finite()) {
      throw NumericError("poisoned gradient in parameter '" + name + "'");
    }
  }

  const double t = static_cast<double>(store.step_count() + 1);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  const double decay = 1.0 - options.lr * options.weight_decay;

  for (auto& [name, entry] : store) {
    auto value = entry.value.data();
    auto grad = entry.grad.data();
    auto m = entry.first_moment.data();
    auto v = entry.second_moment.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] = value[i] * decay - options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
    entry.grad.fill(0.0);
  }
  store.increment_step();
}

}  // namespace vtformer::num
