#include "vvlab/error.hpp"
#include "vvlab/observe.hpp"

namespace vvlab::observe {

ClsAttentionMap cls_attention(const model::ActivationCache& cache, const model::ModelConfig& config,
                              std::size_t layer, std::size_t head) {
  if (layer >= config.num_layers) {
    throw ArgumentError("cls_attention: layer " + std::to_string(layer) + " out of range (model has " +
                        std::to_string(config.num_layers) + ")");
  }
  if (head >= config.num_heads) {
    throw ArgumentError("cls_attention: head " + std::to_string(head) + " out of range (model has " +
                        std::to_string(config.num_heads) + ")");
  }
  const Tensor& probs = cache.at(model::HookPoint::attn_weights(layer));
  const std::size_t seq = config.seq_len();
  const float* row = probs.data() + head * seq * seq;
  const auto g = config.grid();
  ClsAttentionMap map{layer, head, Tensor({g.frames, g.rows, g.cols}), row[0]};
  std::copy(row + 1, row + seq, map.grid.data());
  return map;
}

}  // namespace vvlab::observe
