#include "vtformer/numkit/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace vtformer::num {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

namespace {

double evaluate(const ScalarFn& f, const Tensor& x) {
  Tape tape(GradMode::kInference);
  return f(tape, tape.constant(x)).value()[0];
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  Tensor analytic;
  {
    Tape tape;
    Var input = tape.variable(x);
    tape.backward(f(tape, input));
    analytic = input.grad();
  }
  double worst = 0.0;
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = evaluate(f, probe);
    probe[i] = x[i] - h;
    const double down = evaluate(f, probe);
    probe[i] = x[i];
    worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

ParamGradCheckReport grad_check_params(const ParamLossFn& loss, ParamStore& store,
                                       const ParamGradCheckOptions& options) {
  store.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape, store));
    tape.accumulate_into(store);
  }
  auto numeric_loss = [&] {
    Tape tape(GradMode::kInference);
    return loss(tape, store).value()[0];
  };

  std::mt19937_64 rng(options.seed);
  ParamGradCheckReport report;
  for (auto& [name, entry] : store) {
    std::vector<std::size_t> indices(entry.value.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.max_elements_per_tensor > 0 && indices.size() > options.max_elements_per_tensor) {
      for (std::size_t i = 0; i < options.max_elements_per_tensor; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, indices.size() - 1);
        std::swap(indices[i], indices[pick(rng)]);
      }
      indices.resize(options.max_elements_per_tensor);
    }
    for (std::size_t i : indices) {
      const double original = entry.value[i];
      auto central = [&](double h) {
        entry.value[i] = original + h;
        const double up = numeric_loss();
        entry.value[i] = original - h;
        const double down = numeric_loss();
        entry.value[i] = original;
        return (up - down) / (2.0 * h);
      };
      double err = relative_error(entry.grad[i], central(options.h));
      if (err > options.retry_above && !options.fallback_steps.empty()) {
        ++report.retried;
        for (double h : options.fallback_steps) {
          err = std::min(err, relative_error(entry.grad[i], central(h)));
          if (err <= options.retry_above) break;
        }
      }
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
  }
  store.zero_grad();
  return report;
}

}  // namespace vtformer::num
