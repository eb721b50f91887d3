#include "vvlab/model.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "model_internal.hpp"
#include "vvlab/error.hpp"
#include "vvlab/ops.hpp"

namespace vvlab::model {
namespace detail {

void check_video(const Tensor& video, const ModelConfig& config) {
  const Shape expected{config.frames, config.image_size, config.image_size, config.channels};
  if (video.shape() != expected) {
    throw ConfigError("video shape " + shape_to_string(video.shape()) + " does not match model input " +
                      shape_to_string(expected));
  }
}

AttentionInternals attention_core(const LayerWeights& layer, const Tensor& normed, std::size_t num_heads) {
  const std::size_t seq = normed.dim(0);
  const std::size_t d = normed.dim(1);
  const std::size_t dh = d / num_heads;
  AttentionInternals a;
  a.q = matmul(normed, layer.w_q);
  add_row_bias(a.q, layer.b_q);
  a.k = matmul(normed, layer.w_k);
  add_row_bias(a.k, layer.b_k);
  a.v = matmul(normed, layer.w_v);
  add_row_bias(a.v, layer.b_v);
  a.probs = Tensor({num_heads, seq, seq});
  a.z = Tensor({seq, d});
  const float inv_sqrt = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (std::size_t h = 0; h < num_heads; ++h) {
    Tensor scores = matmul_transpose_b(slice_columns(a.q, h * dh, dh), slice_columns(a.k, h * dh, dh));
    for (auto& s : scores.values()) s *= inv_sqrt;
    Tensor p = softmax(scores);
    std::copy(p.data(), p.data() + p.size(), a.probs.data() + h * seq * seq);
    assign_columns(a.z, matmul(p, slice_columns(a.v, h * dh, dh)), h * dh);
  }
  return a;
}

}  // namespace detail

namespace {

// Routes interventions and captures at each seam of one forward pass.
class Seams {
 public:
  Seams(std::span<const Intervention> interventions, const HookSet& capture, const ModelConfig& config)
      : capture_(capture), config_(config) {
    validate_interventions(interventions, config);
    for (const auto& iv : interventions) by_hook_[iv.at].push_back(&iv);
    for (const auto& hook : capture) hook.validate(config);
  }

  void apply(const HookPoint& hook, Tensor& value) {
    auto it = by_hook_.find(hook);
    if (it != by_hook_.end()) {
      for (const Intervention* iv : it->second) {
        if (const auto* rep = std::get_if<Replace>(&iv->action)) {
          value = rep->value;
        } else {
          for (std::size_t t : std::get<ZeroTokens>(iv->action).tokens) {
            auto row = value.row(t + 1);
            std::fill(row.begin(), row.end(), 0.0f);
          }
        }
      }
    }
    if (capture_.count(hook)) cache_.put(hook, value);
  }

  bool head_hooks_at(std::size_t layer) const {
    for (std::size_t h = 0; h < config_.num_heads; ++h) {
      const auto hook = HookPoint::head_out(layer, h);
      if (capture_.count(hook) || by_hook_.count(hook)) return true;
    }
    return false;
  }

  ActivationCache take_cache() { return std::move(cache_); }

 private:
  const HookSet& capture_;
  const ModelConfig& config_;
  std::map<HookPoint, std::vector<const Intervention*>> by_hook_;
  ActivationCache cache_;
};

// One implementation serves hooked inference (seams) and training (tape).
Tensor run(const Tensor& video, const Weights& w, const ModelConfig& cfg, Seams* seams, ForwardTape* tape) {
  auto seam = [&](const HookPoint& hook, Tensor& value) {
    if (seams) seams->apply(hook, value);
  };
  const std::size_t heads = cfg.num_heads;
  const std::size_t dh = cfg.head_dim();

  Tensor patches = extract_tubelets(video, cfg);
  Tensor x({cfg.seq_len(), cfg.d_model});
  {
    Tensor proj = matmul(patches, w.patch_kernel);
    add_row_bias(proj, w.patch_bias);
    std::copy(w.cls_embedding.data(), w.cls_embedding.data() + cfg.d_model, x.data());
    std::copy(proj.data(), proj.data() + proj.size(), x.data() + cfg.d_model);
    add_inplace(x, w.position_embedding);
  }
  if (tape) {
    tape->patches = std::move(patches);
    tape->layers.resize(cfg.num_layers);
  }
  seam(HookPoint::embed(), x);

  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const LayerWeights& L = w.layers[l];
    seam(HookPoint::resid_pre(l), x);

    Tensor ln1 = layernorm(x, L.ln1_gamma, L.ln1_beta, cfg.ln_eps);
    detail::AttentionInternals att = detail::attention_core(L, ln1, heads);
    if (seams) seams->apply(HookPoint::attn_weights(l), att.probs);

    Tensor attn_out;
    if (seams && seams->head_hooks_at(l)) {
      attn_out = Tensor({cfg.seq_len(), cfg.d_model});
      for (std::size_t h = 0; h < heads; ++h) {
        Tensor head = matmul(slice_columns(att.z, h * dh, dh), slice_rows(L.w_o, h * dh, dh));
        seams->apply(HookPoint::head_out(l, h), head);
        add_inplace(attn_out, head);
      }
    } else {
      attn_out = matmul(att.z, L.w_o);
    }
    add_row_bias(attn_out, L.b_o);
    seam(HookPoint::attn_out(l), attn_out);

    Tensor mid = add(x, attn_out);
    Tensor ln2 = layernorm(mid, L.ln2_gamma, L.ln2_beta, cfg.ln_eps);
    Tensor pre_act = matmul(ln2, L.w_in);
    add_row_bias(pre_act, L.b_in);
    Tensor act = gelu(pre_act, cfg.gelu);
    Tensor mlp_out = matmul(act, L.w_out);
    add_row_bias(mlp_out, L.b_out);
    seam(HookPoint::mlp_out(l), mlp_out);

    Tensor next = add(mid, mlp_out);
    if (tape) {
      LayerTape& t = tape->layers[l];
      t.resid_pre = std::move(x);
      t.ln1 = std::move(ln1);
      t.q = std::move(att.q);
      t.k = std::move(att.k);
      t.v = std::move(att.v);
      t.probs = std::move(att.probs);
      t.z = std::move(att.z);
      t.mid = std::move(mid);
      t.ln2 = std::move(ln2);
      t.pre_act = std::move(pre_act);
      t.act = std::move(act);
    }
    x = std::move(next);
    seam(HookPoint::resid_post(l), x);
  }

  Tensor logits({cfg.num_classes});
  Tensor cls_normed;
  if (seams) {
    Tensor final_ln = layernorm(x, w.final_ln_gamma, w.final_ln_beta, cfg.ln_eps);
    seams->apply(HookPoint::final_ln_out(), final_ln);
    cls_normed = slice_rows(final_ln, 0, 1);
  } else {
    cls_normed = layernorm(slice_rows(x, 0, 1), w.final_ln_gamma, w.final_ln_beta, cfg.ln_eps);
  }
  logits = matmul(cls_normed, w.unembed).reshaped({cfg.num_classes});
  add_inplace(logits, w.unembed_bias);
  seam(HookPoint::logits(), logits);

  if (tape) {
    tape->resid_final = std::move(x);
    tape->final_cls = cls_normed.reshaped({cfg.d_model});
    tape->logits = logits;
  }
  return logits;
}

}  // namespace

Tensor extract_tubelets(const Tensor& video, const ModelConfig& config) {
  detail::check_video(video, config);
  const auto grid = config.grid();
  const auto [tt, th, tw] = config.tubelet;
  const std::size_t img = config.image_size, ch = config.channels;
  Tensor patches({grid.size(), config.patch_dim()});
  float* out = patches.data();
  for (std::size_t ti = 0; ti < grid.frames; ++ti)
    for (std::size_t hi = 0; hi < grid.rows; ++hi)
      for (std::size_t wi = 0; wi < grid.cols; ++wi)
        for (std::size_t dt = 0; dt < tt; ++dt)
          for (std::size_t dy = 0; dy < th; ++dy) {
            const std::size_t f = ti * tt + dt, y = hi * th + dy;
            const float* src = video.data() + ((f * img + y) * img + wi * tw) * ch;
            out = std::copy(src, src + tw * ch, out);
          }
  return patches;
}

Tensor tubelet_embed(const Tensor& video, const Weights& weights, const ModelConfig& config) {
  Tensor proj = matmul(extract_tubelets(video, config), weights.patch_kernel);
  add_row_bias(proj, weights.patch_bias);
  Tensor x({config.seq_len(), config.d_model});
  std::copy(weights.cls_embedding.data(), weights.cls_embedding.data() + config.d_model, x.data());
  std::copy(proj.data(), proj.data() + proj.size(), x.data() + config.d_model);
  add_inplace(x, weights.position_embedding);
  return x;
}

AttentionOutput attention_block(const LayerWeights& layer, const Tensor& normed, std::size_t num_heads) {
  if (normed.rank() != 2 || num_heads == 0 || normed.dim(1) % num_heads != 0) {
    throw DimensionError("attention_block: input " + shape_to_string(normed.shape()) + " cannot be split into " +
                         std::to_string(num_heads) + " heads");
  }
  detail::AttentionInternals a = detail::attention_core(layer, normed, num_heads);
  Tensor out = matmul(a.z, layer.w_o);
  add_row_bias(out, layer.b_o);
  return {std::move(out), std::move(a.probs)};
}

Tensor mlp_block(const LayerWeights& layer, const Tensor& normed, GeluVariant variant) {
  Tensor h = matmul(normed, layer.w_in);
  add_row_bias(h, layer.b_in);
  Tensor out = matmul(gelu(h, variant), layer.w_out);
  add_row_bias(out, layer.b_out);
  return out;
}

void validate_interventions(std::span<const Intervention> interventions, const ModelConfig& config) {
  std::map<HookPoint, int> replaces;
  for (const auto& iv : interventions) {
    iv.at.validate(config);
    const std::string where = "intervention at " + iv.at.to_string();
    if (iv.at.kind == HookPoint::Kind::AttnWeights) {
      throw InterventionError(where + ": attention weights are capture-only");
    }
    if (const auto* rep = std::get_if<Replace>(&iv.action)) {
      const Shape expected = iv.at.natural_shape(config);
      if (rep->value.shape() != expected) {
        throw InterventionError(where + ": replacement shape " + shape_to_string(rep->value.shape()) +
                                " does not match " + shape_to_string(expected));
      }
      if (++replaces[iv.at] > 1) throw InterventionError(where + ": duplicate Replace at one hook is ambiguous");
    } else {
      const auto& zt = std::get<ZeroTokens>(iv.action);
      const bool allowed = iv.at.kind == HookPoint::Kind::Embed ||
                           (iv.at.kind == HookPoint::Kind::ResidPre && iv.at.layer == 0);
      if (!allowed) throw InterventionError(where + ": ZeroTokens is only valid at embed or resid_pre(0)");
      for (std::size_t t : zt.tokens) {
        if (t >= config.num_tokens()) {
          throw InterventionError(where + ": token " + std::to_string(t) + " out of range (N = " +
                                  std::to_string(config.num_tokens()) + ")");
        }
      }
    }
  }
}

ForwardResult forward(const Tensor& video, const Weights& weights, const ModelConfig& config,
                      std::span<const Intervention> interventions, const HookSet& capture) {
  detail::check_video(video, config);
  check_shapes(weights, config);
  Seams seams(interventions, capture, config);
  Tensor logits = run(video, weights, config, &seams, nullptr);
  return {std::move(logits), seams.take_cache()};
}

ForwardTape forward_with_tape(const Tensor& video, const Weights& weights, const ModelConfig& config) {
  detail::check_video(video, config);
  check_shapes(weights, config);
  ForwardTape tape;
  run(video, weights, config, nullptr, &tape);
  return tape;
}

}  // namespace vvlab::model
