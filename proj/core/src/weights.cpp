#include "vvlab/weights.hpp"

#include <random>

#include "vvlab/error.hpp"

namespace vvlab::model {
namespace {

template <class W, class Out>
void collect(W& w, Out& out) {
  out.emplace_back("embed.patch_kernel", &w.patch_kernel);
  out.emplace_back("embed.patch_bias", &w.patch_bias);
  out.emplace_back("embed.cls", &w.cls_embedding);
  out.emplace_back("embed.position", &w.position_embedding);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto& L = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    out.emplace_back(p + "ln1.gamma", &L.ln1_gamma);
    out.emplace_back(p + "ln1.beta", &L.ln1_beta);
    out.emplace_back(p + "attn.w_q", &L.w_q);
    out.emplace_back(p + "attn.b_q", &L.b_q);
    out.emplace_back(p + "attn.w_k", &L.w_k);
    out.emplace_back(p + "attn.b_k", &L.b_k);
    out.emplace_back(p + "attn.w_v", &L.w_v);
    out.emplace_back(p + "attn.b_v", &L.b_v);
    out.emplace_back(p + "attn.w_o", &L.w_o);
    out.emplace_back(p + "attn.b_o", &L.b_o);
    out.emplace_back(p + "ln2.gamma", &L.ln2_gamma);
    out.emplace_back(p + "ln2.beta", &L.ln2_beta);
    out.emplace_back(p + "mlp.w_in", &L.w_in);
    out.emplace_back(p + "mlp.b_in", &L.b_in);
    out.emplace_back(p + "mlp.w_out", &L.w_out);
    out.emplace_back(p + "mlp.b_out", &L.b_out);
  }
  out.emplace_back("final_ln.gamma", &w.final_ln_gamma);
  out.emplace_back("final_ln.beta", &w.final_ln_beta);
  out.emplace_back("unembed.weight", &w.unembed);
  out.emplace_back("unembed.bias", &w.unembed_bias);
}

bool is_ln_gamma(const std::string& name) { return name.ends_with("gamma"); }

bool is_bias_like(const std::string& name) {
  return name.ends_with("beta") || name.ends_with("bias") || name.find(".b_") != std::string::npos;
}

}  // namespace

std::vector<NamedTensor> parameters(Weights& weights) {
  std::vector<NamedTensor> out;
  collect(weights, out);
  return out;
}

std::vector<NamedConstTensor> parameters(const Weights& weights) {
  std::vector<NamedConstTensor> out;
  collect(weights, out);
  return out;
}

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.d_model, m = c.d_mlp;
  std::vector<std::pair<std::string, Shape>> out;
  out.emplace_back("embed.patch_kernel", Shape{c.patch_dim(), d});
  out.emplace_back("embed.patch_bias", Shape{d});
  out.emplace_back("embed.cls", Shape{d});
  out.emplace_back("embed.position", Shape{c.seq_len(), d});
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    out.emplace_back(p + "ln1.gamma", Shape{d});
    out.emplace_back(p + "ln1.beta", Shape{d});
    for (const char* proj : {"q", "k", "v", "o"}) {
      out.emplace_back(p + "attn.w_" + proj, Shape{d, d});
      out.emplace_back(p + "attn.b_" + proj, Shape{d});
    }
    out.emplace_back(p + "ln2.gamma", Shape{d});
    out.emplace_back(p + "ln2.beta", Shape{d});
    out.emplace_back(p + "mlp.w_in", Shape{d, m});
    out.emplace_back(p + "mlp.b_in", Shape{m});
    out.emplace_back(p + "mlp.w_out", Shape{m, d});
    out.emplace_back(p + "mlp.b_out", Shape{d});
  }
  out.emplace_back("final_ln.gamma", Shape{d});
  out.emplace_back("final_ln.beta", Shape{d});
  out.emplace_back("unembed.weight", Shape{d, c.num_classes});
  out.emplace_back("unembed.bias", Shape{c.num_classes});
  return out;
}

Weights zeros_like(const ModelConfig& config) {
  Weights w;
  w.layers.resize(config.num_layers);
  auto shapes = parameter_shapes(config);
  auto params = parameters(w);
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].second = Tensor(shapes[i].second);
  return w;
}

Weights init_random(const ModelConfig& config, std::uint64_t seed) {
  Weights w = zeros_like(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 0.02f);
  for (auto& [name, t] : parameters(w)) {
    if (is_ln_gamma(name)) {
      for (auto& v : t->values()) v = 1.0f;
    } else if (!is_bias_like(name)) {
      for (auto& v : t->values()) v = normal(rng);
    }
  }
  return w;
}

void check_shapes(const Weights& weights, const ModelConfig& config) {
  if (weights.layers.size() != config.num_layers) {
    throw DimensionError("weights have " + std::to_string(weights.layers.size()) + " layers, config expects " +
                         std::to_string(config.num_layers));
  }
  auto shapes = parameter_shapes(config);
  auto params = parameters(weights);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].second->shape() != shapes[i].second) {
      throw DimensionError("parameter " + params[i].first + " has shape " +
                           shape_to_string(params[i].second->shape()) + ", expected " +
                           shape_to_string(shapes[i].second));
    }
  }
}

std::size_t parameter_count(const Weights& weights) {
  std::size_t n = 0;
  for (const auto& [name, t] : parameters(weights)) n += t->size();
  return n;
}

}  // namespace vvlab::model
