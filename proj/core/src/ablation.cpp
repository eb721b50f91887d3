#include <algorithm>
#include <cmath>
#include <numeric>

#include "vvlab/causal.hpp"
#include "vvlab/error.hpp"
#include "vvlab/model.hpp"

namespace vvlab::causal {

std::vector<std::size_t> rank_tokens(const Tensor& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

std::vector<RankedLogit> top_classes(const Tensor& logits, const model::ModelConfig& config, std::size_t count) {
  const auto order = rank_tokens(logits);
  std::vector<RankedLogit> out;
  for (std::size_t i = 0; i < std::min(count, order.size()); ++i) {
    out.push_back({i + 1, order[i], config.class_name(order[i]), logits[order[i]]});
  }
  return out;
}

std::size_t ablation_count(double k_percent, std::size_t num_tokens) {
  if (!std::isfinite(k_percent) || k_percent < 0.0 || k_percent > 100.0) {
    throw ArgumentError("k_percent must lie in [0, 100], got " + std::to_string(k_percent));
  }
  // The slack absorbs binary rounding: 29% of 100 tokens is 28.999... in doubles.
  const double raw = k_percent / 100.0 * static_cast<double>(num_tokens);
  const auto count = static_cast<std::size_t>(std::floor(raw + 1e-9));
  return std::min(count, num_tokens);
}

AblationReport topk_ablation(const Tensor& video, const model::Weights& weights, const model::ModelConfig& config,
                             double k_percent, std::size_t target_class) {
  const std::size_t k = ablation_count(k_percent, config.num_tokens());
  if (target_class >= config.num_classes) {
    throw ArgumentError("target class " + std::to_string(target_class) + " out of range");
  }

  auto clean = model::forward(video, weights, config, {}, observe::attribution_hooks(config));
  const observe::TokenScores scores = observe::token_contributions(clean.cache, weights, config, target_class);
  const auto order = rank_tokens(scores.scores);

  AblationReport report;
  report.k_percent = static_cast<float>(k_percent);
  report.target_class = target_class;
  report.ablated_token_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(report.ablated_token_ids.begin(), report.ablated_token_ids.end());

  report.logits_before = clean.logits;
  if (k == 0) {
    report.logits_after = clean.logits;
  } else {
    const model::Intervention zero =
        model::Intervention::zero_tokens(model::HookPoint::resid_pre(0), report.ablated_token_ids);
    report.logits_after = model::forward(video, weights, config, std::span(&zero, 1)).logits;
  }
  report.logit_change = sub(report.logits_after, report.logits_before);
  report.top5_before = top_classes(report.logits_before, config);
  report.top5_after = top_classes(report.logits_after, config);
  for (const RankedLogit& r : report.top5_before) {
    report.rows.push_back({r.rank, r.class_id, r.name, r.logit, report.logits_after[r.class_id],
                           report.logit_change[r.class_id]});
  }
  return report;
}

}  // namespace vvlab::causal
