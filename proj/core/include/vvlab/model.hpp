#pragma once

#include <span>

#include "vvlab/config.hpp"
#include "vvlab/hooks.hpp"
#include "vvlab/tensor.hpp"
#include "vvlab/weights.hpp"

namespace vvlab::model {

/// Splits a [frames, image, image, channels] video into non-overlapping
/// t×h×w×c tubelets flattened in (time, row, col, channel) order.
/// Token order is (tubelet-time, tubelet-row, tubelet-col). Returns [N, patch_dim].
Tensor extract_tubelets(const Tensor& video, const ModelConfig& config);

/// Linear tubelet projection with CLS prepended at row 0 and position
/// embeddings added. Returns [N+1, d_model].
Tensor tubelet_embed(const Tensor& video, const Weights& weights, const ModelConfig& config);

struct AttentionOutput {
  Tensor out;      // [N+1, d_model]
  Tensor weights;  // [heads, N+1, N+1]
};

/// Joint space-time multi-head attention over all tokens (no mask) applied to
/// an already-normalized input; heads are concatenated then projected by W_O.
AttentionOutput attention_block(const LayerWeights& layer, const Tensor& normed, std::size_t num_heads);

/// gelu(x·W_in + b_in)·W_out + b_out, row-wise.
Tensor mlp_block(const LayerWeights& layer, const Tensor& normed, GeluVariant gelu = GeluVariant::Tanh);

struct ForwardResult {
  Tensor logits;  // [num_classes]
  ActivationCache cache;
};

/// Pre-LN forward pass:
///   resid_pre(0) = embed
///   attn_out(l)  = attention(ln1(resid_pre(l)))
///   mlp_out(l)   = mlp(ln2(resid_pre(l) + attn_out(l)))
///   resid_post(l) = resid_pre(l) + attn_out(l) + mlp_out(l) = resid_pre(l+1)
///   logits = final_ln(resid_post(last))[CLS]·W_U + b_U
/// Interventions apply at their seam before the value is consumed; several
/// at one hook compose in list order, and two Replace at one hook are an
/// error. Captures record the post-intervention value.
ForwardResult forward(const Tensor& video, const Weights& weights, const ModelConfig& config,
                      std::span<const Intervention> interventions = {}, const HookSet& capture = {});

/// Checks every intervention against the configuration without running.
void validate_interventions(std::span<const Intervention> interventions, const ModelConfig& config);

}  // namespace vvlab::model
