#include <cmath>

#include "vvlab/error.hpp"
#include "vvlab/observe.hpp"

namespace vvlab::observe {

double FrozenReadout::project(std::span<const float> row) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) acc += direction[j] * row[j];
  return acc;
}

FrozenReadout frozen_readout(const model::ActivationCache& cache, const model::Weights& weights,
                             const model::ModelConfig& config, std::size_t target_class) {
  if (target_class >= config.num_classes) {
    throw ArgumentError("target class " + std::to_string(target_class) + " out of range (" +
                        std::to_string(config.num_classes) + " classes)");
  }
  const std::size_t d = config.d_model;
  const auto final_cls = cache.at(model::HookPoint::resid_post(config.num_layers - 1)).row(0);

  FrozenReadout r;
  for (float v : final_cls) r.mean += v;
  r.mean /= static_cast<double>(d);
  double var = 0.0;
  for (float v : final_cls) var += (v - r.mean) * (v - r.mean);
  var /= static_cast<double>(d);
  r.sigma = std::sqrt(var + static_cast<double>(config.ln_eps));

  std::vector<double> w(d);
  double w_mean = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    w[j] = static_cast<double>(weights.unembed.at(j, target_class)) * weights.final_ln_gamma[j];
    w_mean += w[j];
  }
  w_mean /= static_cast<double>(d);
  r.direction.resize(d);
  for (std::size_t j = 0; j < d; ++j) r.direction[j] = (w[j] - w_mean) / r.sigma;

  r.bias_terms = weights.unembed_bias[target_class];
  for (std::size_t j = 0; j < d; ++j) {
    r.bias_terms += static_cast<double>(weights.unembed.at(j, target_class)) * weights.final_ln_beta[j];
  }
  return r;
}

model::HookSet attribution_hooks(const model::ModelConfig& config) {
  model::HookSet hooks{model::HookPoint::embed(), model::HookPoint::logits()};
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    hooks.insert(model::HookPoint::resid_pre(l));
    hooks.insert(model::HookPoint::attn_weights(l));
    hooks.insert(model::HookPoint::attn_out(l));
    hooks.insert(model::HookPoint::mlp_out(l));
    hooks.insert(model::HookPoint::resid_post(l));
  }
  return hooks;
}

DlaReport dla_layerwise(const model::ActivationCache& cache, const model::Weights& weights,
                        const model::ModelConfig& config, std::size_t target_class) {
  using model::HookPoint;
  const FrozenReadout readout = frozen_readout(cache, weights, config, target_class);
  DlaReport report;
  report.target_class = target_class;

  double total = readout.bias_terms;
  const double embed = readout.project(cache.at(HookPoint::embed()).row(0));
  report.embed_contrib = static_cast<float>(embed);
  total += embed;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const double a = readout.project(cache.at(HookPoint::attn_out(l)).row(0));
    const double m = readout.project(cache.at(HookPoint::mlp_out(l)).row(0));
    report.attn_contrib.push_back(static_cast<float>(a));
    report.mlp_contrib.push_back(static_cast<float>(m));
    total += a + m;
  }
  report.bias_terms = static_cast<float>(readout.bias_terms);
  report.reconstructed_logit = static_cast<float>(total);

  // Unfrozen readout recomputed from the final residual row.
  const auto final_cls = cache.at(HookPoint::resid_post(config.num_layers - 1)).row(0);
  double logit = weights.unembed_bias[target_class];
  for (std::size_t j = 0; j < config.d_model; ++j) {
    const double normed = (final_cls[j] - readout.mean) / readout.sigma * weights.final_ln_gamma[j] +
                          weights.final_ln_beta[j];
    logit += normed * weights.unembed.at(j, target_class);
  }
  report.actual_logit = static_cast<float>(logit);
  return report;
}

}  // namespace vvlab::observe
