#include <cmath>

#include "vvlab/causal.hpp"
#include "vvlab/error.hpp"
#include "vvlab/model.hpp"
#include "vvlab/parallel.hpp"

namespace vvlab::causal {

std::string component_name(Component c) { return c == Component::Attention ? "attn" : "mlp"; }

Component parse_component(const std::string& text) {
  if (text == "attn" || text == "attention") return Component::Attention;
  if (text == "mlp") return Component::Mlp;
  throw ArgumentError("unknown component '" + text + "' (expected attn or mlp)");
}

std::string measure_name(MeasureAt m) { return m == MeasureAt::Cls ? "cls" : "all"; }

MeasureAt parse_measure(const std::string& text) {
  if (text == "cls") return MeasureAt::Cls;
  if (text == "all") return MeasureAt::AllTokens;
  throw ArgumentError("unknown measurement point '" + text + "' (expected cls or all)");
}

model::HookPoint component_hook(Component component, std::size_t layer) {
  return component == Component::Attention ? model::HookPoint::attn_out(layer) : model::HookPoint::mlp_out(layer);
}

double signal_recovery(const Tensor& patched, const Tensor& src, const Tensor& dst) {
  if (patched.shape() != src.shape() || src.shape() != dst.shape()) {
    throw DimensionError("signal_recovery shapes differ: " + shape_to_string(patched.shape()) + ", " +
                         shape_to_string(src.shape()) + ", " + shape_to_string(dst.shape()));
  }
  double patch_sq = 0.0, src_sq = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double dp = static_cast<double>(patched[i]) - dst[i];
    const double ds = static_cast<double>(src[i]) - dst[i];
    patch_sq += dp * dp;
    src_sq += ds * ds;
    cross += dp * ds;
  }
  const double src_norm = std::sqrt(src_sq);
  if (src_norm < kDegenerateNorm) {
    throw DegeneratePairError("source and destination runs are indistinguishable at the measurement point (|delta_src| = " +
                              std::to_string(src_norm) + ")");
  }
  const double sign = cross < 0.0 ? -1.0 : 1.0;
  return std::sqrt(patch_sq) / src_norm * sign * 100.0;
}

model::HookSet patch_hooks(const model::ModelConfig& config) {
  model::HookSet hooks{model::HookPoint::embed()};
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    hooks.insert(model::HookPoint::attn_out(l));
    hooks.insert(model::HookPoint::mlp_out(l));
    hooks.insert(model::HookPoint::resid_post(l));
  }
  return hooks;
}

PatchExperiment::PatchExperiment(Tensor src_video, Tensor dst_video, const model::Weights& weights,
                                 const model::ModelConfig& config, MeasureAt measure_at)
    : dst_video_(std::move(dst_video)), weights_(weights), config_(config), measure_at_(measure_at) {
  if (src_video.shape() != dst_video_.shape()) {
    throw DimensionError("source and destination videos differ in shape: " + shape_to_string(src_video.shape()) +
                         " vs " + shape_to_string(dst_video_.shape()));
  }
  const auto hooks = patch_hooks(config_);
  auto src = model::forward(src_video, weights_, config_, {}, hooks);
  auto dst = model::forward(dst_video_, weights_, config_, {}, hooks);
  src_cache_ = std::move(src.cache);
  dst_cache_ = std::move(dst.cache);
  src_logits_ = std::move(src.logits);
  dst_logits_ = std::move(dst.logits);

  const auto last = model::HookPoint::resid_post(config_.num_layers - 1);
  src_measure_ = measured(src_cache_.at(last));
  dst_measure_ = measured(dst_cache_.at(last));
  // Surfaces a degenerate pair once, before any patched run.
  signal_recovery(dst_measure_, src_measure_, dst_measure_);
}

Tensor PatchExperiment::measured(const Tensor& resid_post_last) const {
  if (measure_at_ == MeasureAt::AllTokens) return resid_post_last;
  const auto cls = resid_post_last.row(0);
  return Tensor({1, cls.size()}, std::vector<float>(cls.begin(), cls.end()));
}

Tensor PatchExperiment::measure(std::span<const model::Intervention> interventions) const {
  const auto last = model::HookPoint::resid_post(config_.num_layers - 1);
  auto run = model::forward(dst_video_, weights_, config_, interventions, {last});
  return measured(run.cache.at(last));
}

double PatchExperiment::recovery_with(std::span<const model::Intervention> interventions) const {
  return signal_recovery(measure(interventions), src_measure_, dst_measure_);
}

double PatchExperiment::recovery(std::size_t layer, Component component) const {
  if (layer >= config_.num_layers) {
    throw ArgumentError("patch layer " + std::to_string(layer) + " out of range (model has " +
                        std::to_string(config_.num_layers) + ")");
  }
  const auto hook = component_hook(component, layer);
  const model::Intervention patch = model::Intervention::replace(hook, src_cache_.at(hook));
  return recovery_with(std::span(&patch, 1));
}

double PatchExperiment::recovery_full_stream() const {
  const auto hook = model::HookPoint::resid_post(config_.num_layers - 1);
  const model::Intervention patch = model::Intervention::replace(hook, src_cache_.at(hook));
  return recovery_with(std::span(&patch, 1));
}

RecoveryTable PatchExperiment::sweep(std::size_t first, std::size_t last) const {
  if (first > last || last > config_.num_layers) {
    throw ArgumentError("sweep range [" + std::to_string(first) + ", " + std::to_string(last) +
                        ") is outside the model's " + std::to_string(config_.num_layers) + " layers");
  }
  RecoveryTable table;
  for (std::size_t l = first; l < last; ++l) {
    table.push_back({l, Component::Attention, 0.0});
    table.push_back({l, Component::Mlp, 0.0});
  }
  parallel_for(table.size(), [&](std::size_t i) { table[i].recovery_percent = recovery(table[i].layer, table[i].component); });
  return table;
}

double patch_component(const Tensor& src_video, const Tensor& dst_video, const model::Weights& weights,
                       const model::ModelConfig& config, std::size_t layer, Component component, MeasureAt measure_at) {
  return PatchExperiment(src_video, dst_video, weights, config, measure_at).recovery(layer, component);
}

RecoveryTable patch_sweep(const Tensor& src_video, const Tensor& dst_video, const model::Weights& weights,
                          const model::ModelConfig& config, std::size_t first, std::optional<std::size_t> last,
                          MeasureAt measure_at) {
  return PatchExperiment(src_video, dst_video, weights, config, measure_at).sweep(first, last.value_or(config.num_layers));
}

}  // namespace vvlab::causal
