#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tabppo/autodiff.hpp"

// Differentiable ops on Tape variables. Unless stated otherwise, "rows" means
// all leading axes flattened and the op acts along the last axis.
namespace tabppo::num {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
/// x[..., n] + bias[n]
Var add_bias(Var x, Var bias);

/// [m x k] * [k x n]
Var matmul(Var a, Var b);
/// [g x m x k] * [g x k x n], or [g x m x k] * [g x n x k]^T when transpose_b.
Var batched_matmul(Var a, Var b, bool transpose_b);

Var relu(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);
Var minimum(Var a, Var b);
/// Clamps into [lo, hi]; the gradient is zero where the bound is active.
Var clamp(Var x, double lo, double hi);

Var softmax(Var x);
Var log_softmax(Var x);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

Var sum(Var x);
Var mean(Var x);
/// [a x b x c] -> [a x c], averaging over the middle axis.
Var mean_axis1(Var x);

/// Rows of table[v x d] selected by `indices` -> [n x d].
Var gather_rows(Var table, std::vector<std::size_t> indices);
/// x[b x c] -> [b], element (i, indices[i]).
Var pick(Var x, std::vector<std::size_t> indices);
/// Concatenates 2-D tensors with equal row counts along the column axis.
Var concat_cols(std::span<const Var> parts);
Var reshape(Var x, Shape shape);
/// [a x b x c x d] -> [a x c x b x d]. Its own inverse.
Var swap_axes12(Var x);

/// Plain (non-recorded) numerically stable softmax of a vector.
std::vector<double> softmax_values(std::span<const double> logits);

}  // namespace tabppo::num
