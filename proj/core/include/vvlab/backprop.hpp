#pragma once

#include <cstddef>
#include <vector>

#include "vvlab/config.hpp"
#include "vvlab/tensor.hpp"
#include "vvlab/weights.hpp"

namespace vvlab::model {

// Reverse-mode gradients for the un-intervened forward pass.

struct LayerTape {
  Tensor resid_pre;
  Tensor ln1;
  Tensor q, k, v;  // [S, d]
  Tensor probs;    // [H, S, S]
  Tensor z;        // [S, d] concatenated head outputs before W_O
  Tensor mid;      // resid_pre + attn_out
  Tensor ln2;
  Tensor pre_act;  // [S, d_mlp]
  Tensor act;
};

struct ForwardTape {
  Tensor patches;      // [N, patch_dim]
  std::vector<LayerTape> layers;
  Tensor resid_final;  // [S, d]
  Tensor final_cls;    // final_ln(resid_final)[CLS], [d]
  Tensor logits;       // [num_classes]
};

ForwardTape forward_with_tape(const Tensor& video, const Weights& weights, const ModelConfig& config);

/// d(loss)/d(weights) given d(loss)/d(logits).
Gradients backward(const ForwardTape& tape, const Weights& weights, const ModelConfig& config,
                   const Tensor& grad_logits);

struct LossGradient {
  float loss = 0.0f;
  Tensor logits;
  Gradients grads;
};

/// Softmax cross-entropy loss against `label` with its parameter gradient.
LossGradient loss_and_gradient(const Tensor& video, std::size_t label, const Weights& weights,
                               const ModelConfig& config);

}  // namespace vvlab::model
