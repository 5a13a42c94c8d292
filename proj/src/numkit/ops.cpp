#include "vtformer/numkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "vtformer/errors.hpp"

namespace vtformer::num {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Tape& tape_of(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error("operands recorded on different tapes");
  return a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

// Accumulates `g` into the gradient of node `id` if it participates in backprop.
template <typename F>
void with_grad(Tape& tape, std::size_t id, F&& f) {
  if (tape.requires_grad(id)) f(tape.grad_buffer(id));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_matrix(A, "matmul");
  require_matrix(B, "matmul");
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw ShapeError("matmul: inner dimensions disagree " + shape_string(A.shape()) +
                     " x " + shape_string(B.shape()));
  }
  Tensor C({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* c_row = &C(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double a_ip = A(i, p);
      const double* b_row = &B(p, 0);
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(C), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& dC = t.grad_of(self);
    with_grad(t, ia, [&](Tensor& dA) {
      const Tensor& B = t.value(ib);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += dC(i, j) * B(p, j);
          dA(i, p) += acc;
        }
      }
    });
    with_grad(t, ib, [&](Tensor& dB) {
      const Tensor& A = t.value(ia);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double a_ip = A(i, p);
          for (std::size_t j = 0; j < n; ++j) dB(p, j) += a_ip * dC(i, j);
        }
      }
    });
  });
}

Var transpose(Var x) {
  const Tensor& X = x.value();
  require_matrix(X, "transpose");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor Y({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) Y(j, i) = X(i, j);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(Y), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const Tensor& dY = t.grad_of(self);
    Tensor& dX = t.grad_buffer(ix);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) dX(i, j) += dY(j, i);
  });
}

Var add(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value() + b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    with_grad(t, ia, [&](Tensor& d) { for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i]; });
    with_grad(t, ib, [&](Tensor& d) { for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i]; });
  });
}

Var sub(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value() - b.value();
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    with_grad(t, ia, [&](Tensor& d) { for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i]; });
    with_grad(t, ib, [&](Tensor& d) { for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g[i]; });
  });
}

Var mul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    with_grad(t, ia, [&](Tensor& d) {
      const Tensor& B = t.value(ib);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * B[i];
    });
    with_grad(t, ib, [&](Tensor& d) {
      const Tensor& A = t.value(ia);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * A[i];
    });
  });
}

Var scale(Var x, double s) {
  Tensor out = s * x.value();
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, s](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s * g[i];
  });
}

Var scale_by(Var x, Var s) {
  Tape& tape = tape_of(x, s);
  if (s.value().size() != 1) {
    throw ShapeError("scale_by: expected a scalar factor, got " + shape_string(s.value().shape()));
  }
  Tensor out = s.value()[0] * x.value();
  const std::size_t ix = x.id(), is = s.id();
  return tape.record(std::move(out), {ix, is}, [ix, is](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    with_grad(t, ix, [&](Tensor& d) {
      const double factor = t.value(is)[0];
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * g[i];
    });
    with_grad(t, is, [&](Tensor& d) {
      const Tensor& X = t.value(ix);
      double acc = 0.0;
      for (std::size_t i = 0; i < X.size(); ++i) acc += g[i] * X[i];
      d[0] += acc;
    });
  });
}

Var add_bias(Var x, Var bias) {
  Tape& tape = tape_of(x, bias);
  const Tensor& X = x.value();
  const Tensor& b = bias.value();
  require_matrix(X, "add_bias");
  const std::size_t m = X.rows(), n = X.cols();
  if (b.size() != n) {
    throw ShapeError("add_bias: bias " + shape_string(b.shape()) + " does not fit " +
                     shape_string(X.shape()));
  }
  Tensor out = X;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) += b[j];
  const std::size_t ix = x.id(), ibias = bias.id();
  return tape.record(std::move(out), {ix, ibias}, [ix, ibias, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    with_grad(t, ix, [&](Tensor& d) { for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i]; });
    with_grad(t, ibias, [&](Tensor& d) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[j] += g(i, j);
    });
  });
}

Var mul_rows_by(Var x, Var gate) {
  Tape& tape = tape_of(x, gate);
  const Tensor& X = x.value();
  const Tensor& G = gate.value();
  require_matrix(X, "mul_rows_by");
  const std::size_t m = X.rows(), n = X.cols();
  if (G.size() != n) {
    throw ShapeError("mul_rows_by: gate " + shape_string(G.shape()) + " does not fit " +
                     shape_string(X.shape()));
  }
  Tensor out = X;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) *= G[j];
  const std::size_t ix = x.id(), ig = gate.id();
  return tape.record(std::move(out), {ix, ig}, [ix, ig, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    with_grad(t, ix, [&](Tensor& d) {
      const Tensor& G = t.value(ig);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d(i, j) += g(i, j) * G[j];
    });
    with_grad(t, ig, [&](Tensor& d) {
      const Tensor& X = t.value(ix);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[j] += g(i, j) * X(i, j);
    });
  });
}

Var mul_cols_by(Var x, Var gate) {
  Tape& tape = tape_of(x, gate);
  const Tensor& X = x.value();
  const Tensor& G = gate.value();
  require_matrix(X, "mul_cols_by");
  const std::size_t m = X.rows(), n = X.cols();
  if (G.size() != m) {
    throw ShapeError("mul_cols_by: gate " + shape_string(G.shape()) + " does not fit " +
                     shape_string(X.shape()));
  }
  Tensor out = X;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) *= G[i];
  const std::size_t ix = x.id(), ig = gate.id();
  return tape.record(std::move(out), {ix, ig}, [ix, ig, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    with_grad(t, ix, [&](Tensor& d) {
      const Tensor& G = t.value(ig);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d(i, j) += g(i, j) * G[i];
    });
    with_grad(t, ig, [&](Tensor& d) {
      const Tensor& X = t.value(ix);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i] += g(i, j) * X(i, j);
    });
  });
}

Var leaky_relu(Var x, double slope) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v >= 0.0 ? v : slope * v;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, slope](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& X = t.value(ix);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += X[i] >= 0.0 ? g[i] : slope * g[i];
  });
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& Y = t.value(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * Y[i] * (1.0 - Y[i]);
  });
}

Var softmax_rows(Var x) {
  const Tensor& X = x.value();
  require_matrix(X, "softmax_rows");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor Y({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double row_max = kNegInf;
    for (std::size_t j = 0; j < n; ++j) row_max = std::max(row_max, X(i, j));
    if (row_max == kNegInf) {
      throw NumericError("softmax_rows: row " + std::to_string(i) + " is entirely -inf");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = X(i, j) == kNegInf ? 0.0 : std::exp(X(i, j) - row_max);
      Y(i, j) = e;
      total += e;
    }
    for (std::size_t j = 0; j < n; ++j) Y(i, j) /= total;
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(Y), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& Y = t.value(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * Y(i, j);
      for (std::size_t j = 0; j < n; ++j) d(i, j) += Y(i, j) * (g(i, j) - dot);
    }
  });
}

Var causal_mask(Var x) {
  const Tensor& X = x.value();
  require_matrix(X, "causal_mask");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out = X;
  for (std::size_t q = 0; q < m; ++q)
    for (std::size_t k = q + 1; k < n; ++k) out(q, k) = kNegInf;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t q = 0; q < m; ++q)
      for (std::size_t k = 0; k <= q && k < n; ++k) d(q, k) += g(q, k);
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& tape = tape_of(x, gain);
  tape_of(x, bias);
  const Tensor& X = x.value();
  require_matrix(X, "layer_norm");
  const std::size_t m = X.rows(), d = X.cols();
  if (d < 2) throw ShapeError("layer_norm: feature dimension must be at least 2");
  if (gain.value().size() != d || bias.value().size() != d) {
    throw ShapeError("layer_norm: gain/bias do not match feature dimension " + std::to_string(d));
  }
  // Cache normalised values and inverse std for the backward pass.
  Tensor xhat({m, d});
  std::vector<double> inv_std(m);
  Tensor out({m, d});
  const Tensor& G = gain.value();
  const Tensor& B = bias.value();
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += X(i, j);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (X(i, j) - mu) * (X(i, j) - mu);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (X(i, j) - mu) * inv_std[i];
      out(i, j) = xhat(i, j) * G[j] + B[j];
    }
  }
  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return tape.record(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, m, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                              std::size_t self) {
        const Tensor& g = t.grad_of(self);
        with_grad(t, ig, [&](Tensor& dG) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) dG[j] += g(i, j) * xhat(i, j);
        });
        with_grad(t, ib, [&](Tensor& dB) {
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j) dB[j] += g(i, j);
        });
        with_grad(t, ix, [&](Tensor& dX) {
          const Tensor& G = t.value(ig);
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t i = 0; i < m; ++i) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dy = g(i, j) * G[j];
              sum_dy += dy;
              sum_dy_xhat += dy * xhat(i, j);
            }
            for (std::size_t j = 0; j < d; ++j) {
              const double dy = g(i, j) * G[j];
              dX(i, j) += inv_std[i] * (dy - inv_d * sum_dy - xhat(i, j) * inv_d * sum_dy_xhat);
            }
          }
        });
      });
}

Var reshape(Var x, std::size_t rows, std::size_t cols) {
  Tensor out = x.value().reshaped({rows, cols});
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& tape = parts.front().tape();
  const std::size_t m = parts.front().value().rows();
  std::vector<std::size_t> ids, offsets, widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != m) {
      throw ShapeError("concat_cols: row count mismatch " + shape_string(parts.front().value().shape()) +
                       " vs " + shape_string(p.value().shape()));
    }
    ids.push_back(p.id());
    offsets.push_back(total);
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out({m, total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& P = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out(i, offsets[k] + j) = P(i, j);
  }
  return tape.record(std::move(out), ids, [ids, offsets, widths, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      with_grad(t, ids[k], [&](Tensor& d) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) d(i, j) += g(i, offsets[k] + j);
      });
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Tape& tape = parts.front().tape();
  const std::size_t n = parts.front().value().cols();
  std::vector<std::size_t> ids, offsets;
  std::size_t total = 0;
  for (const Var& p : parts) {
    tape_of(parts.front(), p);
    if (p.value().cols() != n) {
      throw ShapeError("concat_rows: column count mismatch " +
                       shape_string(parts.front().value().shape()) + " vs " +
                       shape_string(p.value().shape()));
    }
    ids.push_back(p.id());
    offsets.push_back(total * n);
    total += p.value().rows();
  }
  std::vector<double> data;
  data.reserve(total * n);
  for (const Var& p : parts) {
    const auto values = p.value().data();
    data.insert(data.end(), values.begin(), values.end());
  }
  return tape.record(Tensor({total, n}, std::move(data)), ids,
                     [ids, offsets](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad_of(self);
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         with_grad(t, ids[k], [&](Tensor& d) {
                           for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[offsets[k] + i];
                         });
                       }
                     });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  const Tensor& X = x.value();
  require_matrix(X, "slice_rows");
  const std::size_t n = X.cols();
  if (begin + count > X.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + shape_string(X.shape()));
  }
  std::vector<double> data(X.data().begin() + begin * n, X.data().begin() + (begin + count) * n);
  const std::size_t ix = x.id();
  return x.tape().record(Tensor({count, n}, std::move(data)), {ix},
                         [ix, begin, n](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad_of(self);
                           Tensor& d = t.grad_buffer(ix);
                           for (std::size_t i = 0; i < g.size(); ++i) d[begin * n + i] += g[i];
                         });
}

Var mean_over_rows(Var x) {
  const Tensor& X = x.value();
  require_matrix(X, "mean_over_rows");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += X(i, j);
  for (double& v : out.data()) v /= static_cast<double>(m);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    const double w = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d(i, j) += w * g[j];
  });
}

Var max_over_rows(Var x) {
  const Tensor& X = x.value();
  require_matrix(X, "max_over_rows");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out({1, n});
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = X(0, j);
    for (std::size_t i = 1; i < m; ++i) {
      if (X(i, j) > out[j]) {
        out[j] = X(i, j);
        arg[j] = i;
      }
    }
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, arg = std::move(arg)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t j = 0; j < arg.size(); ++j) d(arg[j], j) += g[j];
  });
}

Var mean_over_cols(Var x) {
  const Tensor& X = x.value();
  require_matrix(X, "mean_over_cols");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out({m, 1});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += X(i, j);
    out[i] /= static_cast<double>(n);
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, m, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d(i, j) += w * g[i];
  });
}

Var max_over_cols(Var x) {
  const Tensor& X = x.value();
  require_matrix(X, "max_over_cols");
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out({m, 1});
  std::vector<std::size_t> arg(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = X(i, 0);
    for (std::size_t j = 1; j < n; ++j) {
      if (X(i, j) > out[i]) {
        out[i] = X(i, j);
        arg[i] = j;
      }
    }
  }
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, arg = std::move(arg)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < arg.size(); ++i) d(i, arg[i]) += g[i];
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor::scalar(total), {ix}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad_of(self)[0];
    Tensor& d = t.grad_buffer(ix);
    for (double& v : d.data()) v += g;
  });
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var dropout(Var x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout rate must be below 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x.value().shape());
  for (double& m : mask.data()) {
    // 53-bit uniform in [0, 1); independent of <random> distribution internals.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    m = u >= rate ? keep_scale : 0.0;
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, mask = std::move(mask)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& d = t.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * mask[i];
  });
}

Var mse(Var a, Var b) {
  Var diff = sub(a, b);
  return mean(mul(diff, diff));
}

}  // namespace vtformer::num
