#pragma once

// Differentiable primitives used by the model and the trainer.
//
// Conventions: f32 storage, f64 accumulation inside reductions (norms, means,
// variances, dot products). Row-wise ops treat the last axis as the feature
// axis and every leading axis as a batch of rows.

#include <cstddef>

#include "vvlab/tensor.hpp"

namespace vvlab {

enum class GeluVariant { Tanh, Erf };

// -- matrix products ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);              // [m,k]·[k,n]
Tensor matmul_transpose_a(const Tensor& a, const Tensor& b);  // [k,m]ᵀ·[k,n]
Tensor matmul_transpose_b(const Tensor& a, const Tensor& b);  // [m,k]·[n,k]ᵀ
Tensor transpose(const Tensor& a);

struct MatmulGrad {
  Tensor a;
  Tensor b;
};
MatmulGrad matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out);

// -- elementwise / broadcasting ---------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
void add_inplace(Tensor& dst, const Tensor& src);
/// x[r, :] += bias for every row r.
void add_row_bias(Tensor& x, const Tensor& bias);
/// Sum over rows: [rows, n] -> [n].
Tensor column_sum(const Tensor& x);

// -- softmax -----------------------------------------------------------------

/// Softmax over the last axis, stabilized by max subtraction.
Tensor softmax(const Tensor& x);
Tensor softmax_backward(const Tensor& y, const Tensor& grad_y);

// -- layernorm ---------------------------------------------------------------

/// Row-wise normalization with population variance, then gamma ⊙ x̂ + beta.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps);

struct LayerNormGrad {
  Tensor x;
  Tensor gamma;
  Tensor beta;
};
LayerNormGrad layernorm_backward(const Tensor& x, const Tensor& gamma, float eps, const Tensor& grad_y);

// -- gelu --------------------------------------------------------------------

/// Tanh form: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³))). Erf form: 0.5·x·(1 + erf(x/√2)).
float gelu_scalar(float x, GeluVariant variant = GeluVariant::Tanh);
Tensor gelu(const Tensor& x, GeluVariant variant = GeluVariant::Tanh);
Tensor gelu_backward(const Tensor& x, const Tensor& grad_y, GeluVariant variant = GeluVariant::Tanh);

// -- reductions --------------------------------------------------------------

float l2_norm(const Tensor& x);
Tensor l2_norm_backward(const Tensor& x, float grad);
double dot(const Tensor& a, const Tensor& b);

// -- loss --------------------------------------------------------------------

/// Softmax cross-entropy of a logit vector against an integer label.
float cross_entropy(const Tensor& logits, std::size_t label);
Tensor cross_entropy_backward(const Tensor& logits, std::size_t label);

}  // namespace vvlab

namespace vvlab {

// -- slicing helpers for packed head layouts -----------------------------------

/// Columns [begin, begin + width) of a matrix.
Tensor slice_columns(const Tensor& m, std::size_t begin, std::size_t width);
/// Rows [begin, begin + count) of a matrix.
Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t count);
/// dst[:, begin : begin + src.cols] = src
void assign_columns(Tensor& dst, const Tensor& src, std::size_t begin);

}  // namespace vvlab
