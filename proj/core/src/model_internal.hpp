#pragma once

// Shared forward-pass internals used by model.cpp and backprop.cpp.

#include "vvlab/backprop.hpp"
#include "vvlab/hooks.hpp"
#include "vvlab/model.hpp"

namespace vvlab::model::detail {

struct AttentionInternals {
  Tensor q, k, v;
  Tensor probs;  // [H, S, S]
  Tensor z;      // [S, d]
};

AttentionInternals attention_core(const LayerWeights& layer, const Tensor& normed, std::size_t num_heads);

void check_video(const Tensor& video, const ModelConfig& config);

}  // namespace vvlab::model::detail
