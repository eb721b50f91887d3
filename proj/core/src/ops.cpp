#include "vvlab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vvlab/error.hpp"

namespace vvlab {
namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " + shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

// c[m,n] += a[m,k]·b[k,n]; inner loop runs over contiguous columns of b and c.
void gemm_accumulate(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    float* __restrict crow = c + i * n;
    const float* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // √(2/π)
constexpr double kGeluCubic = 0.044715;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  Tensor c({a.dim(0), b.dim(1)});
  gemm_accumulate(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

Tensor matmul_transpose_a(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_transpose_a");
  require_matrix(b, "matmul_transpose_a");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_transpose_a: leading dimensions disagree, " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  const float* ad = a.data();
  const float* bd = b.data();
  float* cd = c.data();
  for (std::size_t p = 0; p < k; ++p) {
    const float* brow = bd + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const float av = ad[p * m + i];
      float* __restrict crow = cd + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_transpose_b(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_transpose_b");
  require_matrix(b, "matmul_transpose_b");
  if (a.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_transpose_b: inner dimensions disagree, " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
  return matmul(a, transpose(b));
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  Tensor t({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = a[i * n + j];
  return t;
}

MatmulGrad matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out) {
  if (grad_out.rank() != 2 || grad_out.dim(0) != a.dim(0) || grad_out.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_backward: gradient shape " + shape_to_string(grad_out.shape()) +
                         " does not match product of " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  return {matmul_transpose_b(grad_out, b), matmul_transpose_a(a, grad_out)};
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c = a;
  add_inplace(c, b);
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

Tensor scale(const Tensor& a, float s) {
  Tensor c = a;
  for (auto& v : c.values()) v *= s;
  return c;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "add_inplace");
  float* __restrict d = dst.data();
  const float* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void add_row_bias(Tensor& x, const Tensor& bias) {
  if (bias.size() != x.cols()) {
    throw DimensionError("add_row_bias: bias " + shape_to_string(bias.shape()) + " does not fit rows of " +
                         shape_to_string(x.shape()));
  }
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    float* __restrict row = x.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bias[j];
  }
}

Tensor column_sum(const Tensor& x) {
  const std::size_t n = x.cols();
  std::vector<double> acc(n, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const float* row = x.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) acc[j] += row[j];
  }
  Tensor out({n});
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<float>(acc[j]);
  return out;
}

Tensor softmax(const Tensor& x) {
  Tensor y = x;
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    float* row = y.data() + r * n;
    const float mx = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    const double inv = 1.0 / total;
    for (std::size_t j = 0; j < n; ++j) row[j] = static_cast<float>(row[j] * inv);
  }
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& grad_y) {
  require_same_shape(y, grad_y, "softmax_backward");
  Tensor gx(y.shape());
  const std::size_t n = y.cols();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const float* yr = y.data() + r * n;
    const float* gr = grad_y.data() + r * n;
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) inner += static_cast<double>(yr[j]) * gr[j];
    float* out = gx.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<float>(yr[j] * (gr[j] - inner));
  }
  return gx;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  const std::size_t d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layernorm: gamma/beta " + shape_to_string(gamma.shape()) + "/" +
                         shape_to_string(beta.shape()) + " do not match feature axis of " +
                         shape_to_string(x.shape()));
  }
  Tensor y(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const float* xr = x.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + static_cast<double>(eps));
    float* yr = y.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) {
      yr[j] = static_cast<float>((xr[j] - mean) * rstd * gamma[j] + beta[j]);
    }
  }
  return y;
}

LayerNormGrad layernorm_backward(const Tensor& x, const Tensor& gamma, float eps, const Tensor& grad_y) {
  require_same_shape(x, grad_y, "layernorm_backward");
  const std::size_t d = x.cols();
  LayerNormGrad g{Tensor(x.shape()), Tensor({d}), Tensor({d})};
  std::vector<double> dgamma(d, 0.0), dbeta(d, 0.0), xhat(d), gxhat(d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const float* xr = x.data() + r * d;
    const float* gr = grad_y.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + static_cast<double>(eps));
    double mean_g = 0.0, mean_gx = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (xr[j] - mean) * rstd;
      gxhat[j] = static_cast<double>(gr[j]) * gamma[j];
      dgamma[j] += gr[j] * xhat[j];
      dbeta[j] += gr[j];
      mean_g += gxhat[j];
      mean_gx += gxhat[j] * xhat[j];
    }
    mean_g /= static_cast<double>(d);
    mean_gx /= static_cast<double>(d);
    float* out = g.x.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = static_cast<float>(rstd * (gxhat[j] - mean_g - xhat[j] * mean_gx));
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    g.gamma[j] = static_cast<float>(dgamma[j]);
    g.beta[j] = static_cast<float>(dbeta[j]);
  }
  return g;
}

float gelu_scalar(float x, GeluVariant variant) {
  const double v = x;
  if (variant == GeluVariant::Erf) return static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)));
  return static_cast<float>(0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + kGeluCubic * v * v * v))));
}

Tensor gelu(const Tensor& x, GeluVariant variant) {
  Tensor y = x;
  for (auto& v : y.values()) v = gelu_scalar(v, variant);
  return y;
}

Tensor gelu_backward(const Tensor& x, const Tensor& grad_y, GeluVariant variant) {
  require_same_shape(x, grad_y, "gelu_backward");
  Tensor gx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    double d;
    if (variant == GeluVariant::Erf) {
      const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
      d = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2)) + v * pdf;
    } else {
      const double inner = kSqrt2OverPi * (v + kGeluCubic * v * v * v);
      const double t = std::tanh(inner);
      const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * v * v);
      d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dinner;
    }
    gx[i] = static_cast<float>(d * grad_y[i]);
  }
  return gx;
}

float l2_norm(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.values()) acc += static_cast<double>(v) * v;
  return static_cast<float>(std::sqrt(acc));
}

Tensor l2_norm_backward(const Tensor& x, float grad) {
  const double n = l2_norm(x);
  Tensor gx(x.shape());
  if (n == 0.0) return gx;  // subgradient 0 at the origin
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = static_cast<float>(grad * x[i] / n);
  return gx;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: size mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

float cross_entropy(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ArgumentError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                        std::to_string(logits.size()) + " classes");
  }
  const float mx = *std::max_element(logits.data(), logits.data() + logits.size());
  double total = 0.0;
  for (float v : logits.values()) total += std::exp(static_cast<double>(v) - mx);
  return static_cast<float>(std::log(total) + mx - logits[label]);
}

Tensor cross_entropy_backward(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ArgumentError("cross_entropy_backward: label out of range");
  }
  Tensor g = softmax(logits.reshaped({logits.size()}));
  g[label] -= 1.0f;
  return g.reshaped(logits.shape());
}

}  // namespace vvlab

namespace vvlab {

Tensor slice_columns(const Tensor& m, std::size_t begin, std::size_t width) {
  require_matrix(m, "slice_columns");
  if (begin + width > m.dim(1) || width == 0) throw DimensionError("slice_columns: range out of bounds");
  Tensor out({m.dim(0), width});
  for (std::size_t r = 0; r < m.dim(0); ++r) {
    std::copy_n(m.data() + r * m.dim(1) + begin, width, out.data() + r * width);
  }
  return out;
}

Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t count) {
  require_matrix(m, "slice_rows");
  if (begin + count > m.dim(0) || count == 0) throw DimensionError("slice_rows: range out of bounds");
  const std::size_t n = m.dim(1);
  return Tensor({count, n}, std::vector<float>(m.data() + begin * n, m.data() + (begin + count) * n));
}

void assign_columns(Tensor& dst, const Tensor& src, std::size_t begin) {
  require_matrix(dst, "assign_columns");
  require_matrix(src, "assign_columns");
  if (src.dim(0) != dst.dim(0) || begin + src.dim(1) > dst.dim(1)) {
    throw DimensionError("assign_columns: " + shape_to_string(src.shape()) + " does not fit into " +
                         shape_to_string(dst.shape()));
  }
  const std::size_t w = src.dim(1);
  for (std::size_t r = 0; r < src.dim(0); ++r) {
    std::copy_n(src.data() + r * w, w, dst.data() + r * dst.dim(1) + begin);
  }
}

}  // namespace vvlab
