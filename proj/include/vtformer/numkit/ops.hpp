#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "vtformer/numkit/tape.hpp"

// Differentiable matrix operations recorded on a Tape. All operands are
// rank-2; row vectors are 1 x n and scalars 1 x 1.
namespace vtformer::num {

inline constexpr double kDefaultLeakySlope = 0.01;

Var matmul(Var a, Var b);
Var transpose(Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var x, double s);
// x * s where s is a differentiable 1x1 scalar.
Var scale_by(Var x, Var s);
// x[m x n] + b[1 x n] broadcast over rows.
Var add_bias(Var x, Var bias);
// x[m x n] * g[1 x n] broadcast over rows.
Var mul_rows_by(Var x, Var gate);
// x[m x n] * g[m x 1] broadcast over columns.
Var mul_cols_by(Var x, Var gate);

Var leaky_relu(Var x, double slope = kDefaultLeakySlope);
Var sigmoid(Var x);

// Row-wise softmax with max subtraction. -inf entries map to exactly 0;
// a row that is entirely -inf raises NumericError.
Var softmax_rows(Var x);
// Sets entries (q, k) with k > q to -inf.
Var causal_mask(Var x);

// Per-row normalisation to zero mean / unit variance, then gain and bias
// (both 1 x d).
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

Var reshape(Var x, std::size_t rows, std::size_t cols);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var x, std::size_t begin, std::size_t count);

// Reductions: over rows gives 1 x n, over columns gives m x 1.
Var mean_over_rows(Var x);
Var max_over_rows(Var x);
Var mean_over_cols(Var x);
Var max_over_cols(Var x);
Var sum(Var x);
Var mean(Var x);

// Inverted dropout. Identity (and no RNG draw) when rate == 0.
Var dropout(Var x, double rate, std::mt19937_64& rng);

// Mean over all elements of (a - b)^2.
Var mse(Var a, Var b);

}  // namespace vtformer::num
