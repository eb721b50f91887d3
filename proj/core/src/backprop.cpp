#include "vvlab/backprop.hpp"

#include <cmath>

#include "model_internal.hpp"
#include "vvlab/error.hpp"
#include "vvlab/ops.hpp"

namespace vvlab::model {
namespace {

// dW += xᵀ·g ; db += Σ_rows g ; returns g·Wᵀ
Tensor linear_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor& grad_w,
                       Tensor& grad_b) {
  add_inplace(grad_w, matmul_transpose_a(x, grad_out));
  add_inplace(grad_b, column_sum(grad_out));
  return matmul_transpose_b(grad_out, weight);
}

}  // namespace

Gradients backward(const ForwardTape& tape, const Weights& w, const ModelConfig& cfg, const Tensor& grad_logits) {
  if (grad_logits.size() != cfg.num_classes) {
    throw DimensionError("backward: logit gradient has " + std::to_string(grad_logits.size()) + " entries, expected " +
                         std::to_string(cfg.num_classes));
  }
  const std::size_t seq = cfg.seq_len(), d = cfg.d_model, heads = cfg.num_heads, dh = cfg.head_dim();
  Gradients g = zeros_like(cfg);

  // logits = final_cls·W_U + b_U
  const Tensor cls_row = tape.final_cls.reshaped({1, d});
  const Tensor dlogits = grad_logits.reshaped({1, cfg.num_classes});
  add_inplace(g.unembed, matmul_transpose_a(cls_row, dlogits));
  add_inplace(g.unembed_bias, grad_logits.reshaped({cfg.num_classes}));
  const Tensor d_cls_normed = matmul_transpose_b(dlogits, w.unembed);

  // final LN only touches the CLS row.
  LayerNormGrad fln = layernorm_backward(slice_rows(tape.resid_final, 0, 1), w.final_ln_gamma, cfg.ln_eps,
                                         d_cls_normed);
  add_inplace(g.final_ln_gamma, fln.gamma);
  add_inplace(g.final_ln_beta, fln.beta);
  Tensor dx({seq, d});
  std::copy(fln.x.data(), fln.x.data() + d, dx.data());

  const float inv_sqrt = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (std::size_t li = cfg.num_layers; li-- > 0;) {
    const LayerTape& t = tape.layers[li];
    const LayerWeights& L = w.layers[li];
    LayerWeights& G = g.layers[li];

    // x_out = mid + mlp_out
    Tensor d_act = linear_backward(t.act, L.w_out, dx, G.w_out, G.b_out);
    Tensor d_pre = gelu_backward(t.pre_act, d_act, cfg.gelu);
    Tensor d_ln2 = linear_backward(t.ln2, L.w_in, d_pre, G.w_in, G.b_in);
    LayerNormGrad ln2 = layernorm_backward(t.mid, L.ln2_gamma, cfg.ln_eps, d_ln2);
    add_inplace(G.ln2_gamma, ln2.gamma);
    add_inplace(G.ln2_beta, ln2.beta);
    Tensor d_mid = std::move(dx);
    add_inplace(d_mid, ln2.x);

    // mid = resid_pre + attn_out ; attn_out = z·W_O + b_O
    Tensor dz = linear_backward(t.z, L.w_o, d_mid, G.w_o, G.b_o);
    Tensor dq({seq, d}), dk({seq, d}), dv({seq, d});
    for (std::size_t h = 0; h < heads; ++h) {
      const Tensor p({seq, seq}, std::vector<float>(t.probs.data() + h * seq * seq,
                                                    t.probs.data() + (h + 1) * seq * seq));
      const Tensor qh = slice_columns(t.q, h * dh, dh);
      const Tensor kh = slice_columns(t.k, h * dh, dh);
      const Tensor vh = slice_columns(t.v, h * dh, dh);
      const Tensor dzh = slice_columns(dz, h * dh, dh);
      Tensor dp = matmul_transpose_b(dzh, vh);
      assign_columns(dv, matmul_transpose_a(p, dzh), h * dh);
      Tensor ds = softmax_backward(p, dp);
      for (auto& v : ds.values()) v *= inv_sqrt;
      assign_columns(dq, matmul(ds, kh), h * dh);
      assign_columns(dk, matmul_transpose_a(ds, qh), h * dh);
    }
    Tensor d_ln1 = linear_backward(t.ln1, L.w_q, dq, G.w_q, G.b_q);
    add_inplace(d_ln1, linear_backward(t.ln1, L.w_k, dk, G.w_k, G.b_k));
    add_inplace(d_ln1, linear_backward(t.ln1, L.w_v, dv, G.w_v, G.b_v));
    LayerNormGrad ln1 = layernorm_backward(t.resid_pre, L.ln1_gamma, cfg.ln_eps, d_ln1);
    add_inplace(G.ln1_gamma, ln1.gamma);
    add_inplace(G.ln1_beta, ln1.beta);
    add_inplace(d_mid, ln1.x);
    dx = std::move(d_mid);
  }

  // x0 = [cls; patches·K + b] + pos
  add_inplace(g.position_embedding, dx);
  std::copy(dx.data(), dx.data() + d, g.cls_embedding.data());
  const Tensor d_tokens = slice_rows(dx, 1, cfg.num_tokens());
  add_inplace(g.patch_kernel, matmul_transpose_a(tape.patches, d_tokens));
  add_inplace(g.patch_bias, column_sum(d_tokens));
  return g;
}

LossGradient loss_and_gradient(const Tensor& video, std::size_t label, const Weights& weights,
                               const ModelConfig& config) {
  ForwardTape tape = forward_with_tape(video, weights, config);
  LossGradient out;
  out.loss = cross_entropy(tape.logits, label);
  out.grads = backward(tape, weights, config, cross_entropy_backward(tape.logits, label));
  out.logits = std::move(tape.logits);
  return out;
}

}  // namespace vvlab::model
