#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vtformer/numkit/param_store.hpp"
#include "vtformer/numkit/tape.hpp"

namespace vtformer::num {

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

using ScalarFn = std::function<Var(Tape&, Var)>;

// Compares the tape gradient of f at x against central differences with step h.
// Returns the maximum relative error over all elements of x.
double grad_check(const ScalarFn& f, const Tensor& x, double h = 1e-5);

struct ParamGradCheckOptions {
  double h = 1e-5;
  // 0 checks every element; otherwise a seeded random subset of this size per tensor.
  std::size_t max_elements_per_tensor = 0;
  std::uint64_t seed = 0;
  // Steps tried, in order, for elements whose error at `h` exceeds
  // `retry_above`; the best error is kept. Smaller steps get under a nearby
  // leaky ReLU kink, larger ones lift tiny gradients above rounding noise.
  std::vector<double> fallback_steps;
  double retry_above = 1e-6;
};

struct ParamGradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  // Elements re-measured at fallback steps.
  std::size_t retried = 0;
};

using ParamLossFn = std::function<Var(Tape&, const ParamStore&)>;

// Finite-difference check of d loss / d param for the parameters of `store`.
// Values are restored before returning.
ParamGradCheckReport grad_check_params(const ParamLossFn& loss, ParamStore& store,
                                       const ParamGradCheckOptions& options = {});

}  // namespace vtformer::num
