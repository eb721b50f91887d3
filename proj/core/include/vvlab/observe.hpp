#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vvlab/config.hpp"
#include "vvlab/hooks.hpp"
#include "vvlab/tensor.hpp"
#include "vvlab/weights.hpp"

namespace vvlab::observe {

/// The target-class readout with the final layernorm frozen at the
/// statistics of resid_post(last)[CLS]. Under frozen statistics the logit is
/// affine in the residual stream:
///   logit = direction · r + bias_terms
/// with direction = (u ⊙ γ − mean(u ⊙ γ)) / σ, which centers each component
/// on its own, and bias_terms = u · β + b_U.
struct FrozenReadout {
  std::vector<double> direction;  // [d_model]
  double bias_terms = 0.0;
  double mean = 0.0;   // μ of the frozen row
  double sigma = 0.0;  // √(var + eps)

  double project(std::span<const float> row) const;
};

FrozenReadout frozen_readout(const model::ActivationCache& cache, const model::Weights& weights,
                             const model::ModelConfig& config, std::size_t target_class);

/// Direct logit attribution of one class logit onto residual-stream writers.
struct DlaReport {
  std::size_t target_class = 0;
  float embed_contrib = 0.0f;
  std::vector<float> attn_contrib;  // per layer
  std::vector<float> mlp_contrib;   // per layer
  float bias_terms = 0.0f;
  float reconstructed_logit = 0.0f;  // embed + Σ(attn + mlp) + bias_terms
  float actual_logit = 0.0f;         // unfrozen final LN applied to resid_post(last)
};

/// Needs embed, attn_out(l), mlp_out(l) for all l and resid_post(last).
DlaReport dla_layerwise(const model::ActivationCache& cache, const model::Weights& weights,
                        const model::ModelConfig& config, std::size_t target_class);

/// Hooks dla_layerwise and token_contributions read.
model::HookSet attribution_hooks(const model::ModelConfig& config);

/// Direct-path token attribution through each attention block into CLS:
///   score(t) = Σ_l Σ_h A^{l,h}[CLS, t] · readout(OV^{l,h}(ln1(resid_pre(l))[t]))
/// where OV^{l,h}(x) = (x·W_V^h + b_V^h)·W_O^h + b_O / H. Distributing b_O
/// evenly over heads makes Σ_t score(t) + cls_self_term equal the sum of the
/// attention-block DLA contributions.
struct TokenScores {
  std::size_t target_class = 0;
  Tensor scores;  // [N] for non-CLS tokens, token order (t', row, col)
  float cls_self_term = 0.0f;
  model::TokenGrid grid;

  /// scores viewed as [T', H', W'].
  Tensor as_grid() const { return scores.reshaped({grid.frames, grid.rows, grid.cols}); }
};

/// Needs attn_weights(l) and resid_pre(l) for all l plus resid_post(last).
TokenScores token_contributions(const model::ActivationCache& cache, const model::Weights& weights,
                                const model::ModelConfig& config, std::size_t target_class);

struct ClsAttentionMap {
  std::size_t layer = 0;
  std::size_t head = 0;
  Tensor grid;  // [T', H', W'] attention from CLS onto each token
  float cls_self = 0.0f;
};

ClsAttentionMap cls_attention(const model::ActivationCache& cache, const model::ModelConfig& config,
                              std::size_t layer, std::size_t head);

struct ProbeResult {
  std::size_t layer = 0;
  double accuracy = 0.0;  // held-out, or train accuracy when the split was skipped
  double train_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  /// Fewer than 5 samples on a side (no held-out split; `accuracy` is train
  /// accuracy), or both sides hold the same multiset of points.
  bool degenerate = false;
  bool held_out = true;
};

struct ProbeOptions {
  float l2 = 1e-3f;
  std::uint64_t seed = 0;
  int steps = 500;
  float lr = 0.5f;
};

/// Logistic probe on CLS rows of resid_post(layer): side a is label 0, side b
/// label 1. Features are standardized with training-split statistics; the
/// 80/20 split is stratified per side and shuffled by `seed`.
ProbeResult probe_layerwise(std::span<const model::ActivationCache> caches_a,
                            std::span<const model::ActivationCache> caches_b, std::size_t layer,
                            const ProbeOptions& options = {});

/// The same probe on raw feature rows (one row per sample).
ProbeResult probe_features(const Tensor& features_a, const Tensor& features_b, const ProbeOptions& options = {});

}  // namespace vvlab::observe
