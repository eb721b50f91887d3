#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vvlab/config.hpp"
#include "vvlab/tensor.hpp"

namespace vvlab::model {

struct LayerWeights {
  Tensor ln1_gamma, ln1_beta;   // [d]
  Tensor w_q, b_q;              // [d, d], [d]; heads packed along columns
  Tensor w_k, b_k;
  Tensor w_v, b_v;
  Tensor w_o, b_o;              // [d, d], [d]; head h owns rows h·dh .. (h+1)·dh
  Tensor ln2_gamma, ln2_beta;
  Tensor w_in, b_in;            // [d, d_mlp], [d_mlp]
  Tensor w_out, b_out;          // [d_mlp, d], [d]
};

struct Weights {
  Tensor patch_kernel;          // [t·h·w·c, d]
  Tensor patch_bias;            // [d]
  Tensor cls_embedding;         // [d]
  Tensor position_embedding;    // [N+1, d]
  std::vector<LayerWeights> layers;
  Tensor final_ln_gamma, final_ln_beta;
  Tensor unembed;               // W_U [d, num_classes]
  Tensor unembed_bias;          // b_U [num_classes]
};

/// Per-parameter gradients share the Weights layout.
using Gradients = Weights;

using NamedTensor = std::pair<std::string, Tensor*>;
using NamedConstTensor = std::pair<std::string, const Tensor*>;

/// Canonical parameter order and names, e.g. "layers.3.attn.w_q".
std::vector<NamedTensor> parameters(Weights& weights);
std::vector<NamedConstTensor> parameters(const Weights& weights);

/// Expected (name, shape) list for a configuration, in canonical order.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& config);

/// All-zero weights with the configuration's shapes (LN gammas are zero too).
Weights zeros_like(const ModelConfig& config);

/// Gaussian(0, 0.02) matrices and embeddings, zero biases, LN gamma 1 / beta 0.
Weights init_random(const ModelConfig& config, std::uint64_t seed);

/// Throws DimensionError naming the first tensor whose shape disagrees.
void check_shapes(const Weights& weights, const ModelConfig& config);

std::size_t parameter_count(const Weights& weights);

}  // namespace vvlab::model
