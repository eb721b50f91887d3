#include "vvlab/error.hpp"
#include "vvlab/observe.hpp"
#include "vvlab/ops.hpp"

namespace vvlab::observe {

TokenScores token_contributions(const model::ActivationCache& cache, const model::Weights& weights,
                                const model::ModelConfig& config, std::size_t target_class) {
  using model::HookPoint;
  const FrozenReadout readout = frozen_readout(cache, weights, config, target_class);
  const std::size_t seq = config.seq_len(), d = config.d_model, heads = config.num_heads, dh = config.head_dim();

  std::vector<double> score(seq, 0.0);  // row 0 accumulates the CLS self-term
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const model::LayerWeights& L = weights.layers[l];
    const Tensor& probs = cache.at(HookPoint::attn_weights(l));
    const Tensor normed = layernorm(cache.at(HookPoint::resid_pre(l)), L.ln1_gamma, L.ln1_beta, config.ln_eps);
    Tensor values = matmul(normed, L.w_v);
    add_row_bias(values, L.b_v);

    double bias_share = 0.0;  // readout(b_O) / H
    for (std::size_t j = 0; j < d; ++j) bias_share += readout.direction[j] * L.b_o[j];
    bias_share /= static_cast<double>(heads);

    for (std::size_t h = 0; h < heads; ++h) {
      // readout(v·W_O^h) = v · (W_O^h · direction)
      std::vector<double> folded(dh, 0.0);
      for (std::size_t i = 0; i < dh; ++i) {
        const float* w_row = L.w_o.data() + (h * dh + i) * d;
        for (std::size_t j = 0; j < d; ++j) folded[i] += static_cast<double>(w_row[j]) * readout.direction[j];
      }
      const float* cls_attn = probs.data() + h * seq * seq;  // row 0 of head h
      for (std::size_t t = 0; t < seq; ++t) {
        const float* v = values.data() + t * d + h * dh;
        double proj = bias_share;
        for (std::size_t i = 0; i < dh; ++i) proj += static_cast<double>(v[i]) * folded[i];
        score[t] += static_cast<double>(cls_attn[t]) * proj;
      }
    }
  }

  TokenScores out;
  out.target_class = target_class;
  out.grid = config.grid();
  out.cls_self_term = static_cast<float>(score[0]);
  out.scores = Tensor({config.num_tokens()});
  for (std::size_t t = 1; t < seq; ++t) out.scores[t - 1] = static_cast<float>(score[t]);
  return out;
}

}  // namespace vvlab::observe
