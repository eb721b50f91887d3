#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vvlab/config.hpp"
#include "vvlab/hooks.hpp"
#include "vvlab/observe.hpp"
#include "vvlab/tensor.hpp"
#include "vvlab/weights.hpp"

namespace vvlab::causal {

// -- delta analysis ------------------------------------------------------------

/// Per-layer size of the strike − gutter difference of resid_post(l).
struct DeltaCurve {
  std::vector<float> avg_l2;  // mean over the N+1 rows of each row's L2 norm
  std::vector<float> cls_l2;  // L2 norm of the CLS row
};

/// Both caches need resid_post(l) for every layer.
DeltaCurve delta_analysis(const model::ActivationCache& strike, const model::ActivationCache& gutter,
                          const model::ModelConfig& config);

// -- top-K ablation ------------------------------------------------------------

struct RankedLogit {
  std::size_t rank = 0;  // 1-based
  std::size_t class_id = 0;
  std::string name;
  float logit = 0.0f;
};

struct AblationRow {
  std::size_t rank = 0;  // rank before ablation, 1-based
  std::size_t class_id = 0;
  std::string name;
  float logit_before = 0.0f;
  float logit_after = 0.0f;
  float change = 0.0f;
};

struct AblationReport {
  float k_percent = 0.0f;
  std::size_t target_class = 0;
  std::vector<std::size_t> ablated_token_ids;  // ascending, non-CLS token indices
  std::vector<RankedLogit> top5_before;
  std::vector<RankedLogit> top5_after;
  std::vector<AblationRow> rows;  // top-5 classes before ablation, with their logits after
  Tensor logits_before;
  Tensor logits_after;
  Tensor logit_change;  // after − before, every class
};

/// Token indices sorted by descending score; ties go to the lower index.
std::vector<std::size_t> rank_tokens(const Tensor& scores);

/// Highest-first classes of a logit vector; ties go to the lower class id.
std::vector<RankedLogit> top_classes(const Tensor& logits, const model::ModelConfig& config, std::size_t count = 5);

/// Number of tokens ablated at k percent: ⌊k/100 · N⌋.
std::size_t ablation_count(double k_percent, std::size_t num_tokens);

/// Ranks tokens by token_contributions for `target_class`, zeroes the top
/// ⌊k/100 · N⌋ rows of resid_pre(0) (CLS untouched) and reruns.
AblationReport topk_ablation(const Tensor& video, const model::Weights& weights, const model::ModelConfig& config,
                             double k_percent, std::size_t target_class);

// -- activation patching -------------------------------------------------------

enum class Component { Attention, Mlp };
enum class MeasureAt { Cls, AllTokens };

std::string component_name(Component c);  // "attn" | "mlp"
Component parse_component(const std::string& text);
std::string measure_name(MeasureAt m);  // "cls" | "all"
MeasureAt parse_measure(const std::string& text);

model::HookPoint component_hook(Component component, std::size_t layer);

/// Threshold on ‖Δ_src‖ below which a pair counts as indistinguishable.
inline constexpr double kDegenerateNorm = 1e-9;

/// Signed signal recovery in percent from three views of the measurement
/// point (all the same shape):
///   Δ_patch = patched − dst,  Δ_src = src − dst
///   recovery = ‖Δ_patch‖ / ‖Δ_src‖ · sign(Δ_patch · Δ_src) · 100
/// A zero dot product counts as positive. Throws DegeneratePairError when
/// ‖Δ_src‖ < kDegenerateNorm.
double signal_recovery(const Tensor& patched, const Tensor& src, const Tensor& dst);

struct RecoveryRow {
  std::size_t layer = 0;
  Component component = Component::Attention;
  double recovery_percent = 0.0;
};

using RecoveryTable = std::vector<RecoveryRow>;

/// One source/destination pair with the clean runs captured once. Every
/// patched run reuses the source cache; the constructor throws
/// DegeneratePairError when the pair is indistinguishable at the
/// measurement point. `weights` must outlive the experiment.
class PatchExperiment {
 public:
  PatchExperiment(Tensor src_video, Tensor dst_video, const model::Weights& weights, const model::ModelConfig& config,
                  MeasureAt measure_at = MeasureAt::Cls);

  /// Replace attn_out(layer) or mlp_out(layer) in the dst run with the src activation.
  double recovery(std::size_t layer, Component component) const;
  /// Replace resid_post(last) itself; 100 by construction.
  double recovery_full_stream() const;
  /// Recovery of an arbitrary intervention list applied to the dst run.
  double recovery_with(std::span<const model::Intervention> interventions) const;
  /// (layer, component) rows for layers [first, last), attention before MLP.
  RecoveryTable sweep(std::size_t first, std::size_t last) const;

  /// Measurement rows of resid_post(last) from a dst run with interventions.
  Tensor measure(std::span<const model::Intervention> interventions) const;
  Tensor measured(const Tensor& resid_post_last) const;

  const model::ActivationCache& src_cache() const { return src_cache_; }
  const model::ActivationCache& dst_cache() const { return dst_cache_; }
  const Tensor& src_logits() const { return src_logits_; }
  const Tensor& dst_logits() const { return dst_logits_; }
  MeasureAt measure_at() const { return measure_at_; }

 private:
  Tensor dst_video_;
  const model::Weights& weights_;
  model::ModelConfig config_;
  MeasureAt measure_at_;
  model::ActivationCache src_cache_;
  model::ActivationCache dst_cache_;
  Tensor src_logits_, dst_logits_;
  Tensor src_measure_, dst_measure_;
};

/// Every hook a patch experiment captures from the clean runs.
model::HookSet patch_hooks(const model::ModelConfig& config);

double patch_component(const Tensor& src_video, const Tensor& dst_video, const model::Weights& weights,
                       const model::ModelConfig& config, std::size_t layer, Component component,
                       MeasureAt measure_at = MeasureAt::Cls);

/// Layers [first, last); `last` defaults to num_layers.
RecoveryTable patch_sweep(const Tensor& src_video, const Tensor& dst_video, const model::Weights& weights,
                          const model::ModelConfig& config, std::size_t first = 0,
                          std::optional<std::size_t> last = std::nullopt, MeasureAt measure_at = MeasureAt::Cls);

}  // namespace vvlab::causal
