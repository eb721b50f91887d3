#include <cstdio>
#include <json.hpp>

#include "vvlab/report.hpp"

namespace vvlab::report {
namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string delta_csv(const causal::DeltaCurve& curve) {
  std::string out = "layer,avg_l2,cls_l2\n";
  for (std::size_t l = 0; l < curve.avg_l2.size(); ++l) {
    out += std::to_string(l) + "," + fixed(curve.avg_l2[l]) + "," + fixed(curve.cls_l2[l]) + "\n";
  }
  return out;
}

std::string recovery_csv(const causal::RecoveryTable& table) {
  std::string out = "layer,component,recovery_percent\n";
  for (const auto& row : table) {
    out += std::to_string(row.layer) + "," + causal::component_name(row.component) + "," +
           fixed(row.recovery_percent) + "\n";
  }
  return out;
}

std::string dla_csv(const observe::DlaReport& dla) {
  std::string out = "layer,component,value\n";
  out += "-1,embed," + fixed(dla.embed_contrib) + "\n";
  for (std::size_t l = 0; l < dla.attn_contrib.size(); ++l) {
    out += std::to_string(l) + ",attn," + fixed(dla.attn_contrib[l]) + "\n";
    out += std::to_string(l) + ",mlp," + fixed(dla.mlp_contrib[l]) + "\n";
  }
  out += "-1,bias," + fixed(dla.bias_terms) + "\n";
  return out;
}

std::string probe_csv(const std::vector<observe::ProbeResult>& probes) {
  std::string out = "layer,accuracy,train_accuracy,n_train,n_test,held_out,degenerate\n";
  for (const auto& p : probes) {
    out += std::to_string(p.layer) + "," + fixed(p.accuracy) + "," + fixed(p.train_accuracy) + "," +
           std::to_string(p.n_train) + "," + std::to_string(p.n_test) + "," + (p.held_out ? "1" : "0") + "," +
           (p.degenerate ? "1" : "0") + "\n";
  }
  return out;
}

std::string loss_csv(const std::vector<double>& loss_curve) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < loss_curve.size(); ++e) out += std::to_string(e + 1) + "," + fixed(loss_curve[e]) + "\n";
  return out;
}

std::string token_csv(const observe::TokenScores& scores) {
  std::string out = "token,frame,row,col,score\n";
  const auto& g = scores.grid;
  for (std::size_t t = 0; t < scores.scores.size(); ++t) {
    const std::size_t f = t / (g.rows * g.cols), r = (t / g.cols) % g.rows, c = t % g.cols;
    out += std::to_string(t) + "," + std::to_string(f) + "," + std::to_string(r) + "," + std::to_string(c) + "," +
           fixed(scores.scores[t]) + "\n";
  }
  return out;
}

std::string ablation_json(const causal::AblationReport& report) {
  using nlohmann::json;
  auto ranked = [](const std::vector<causal::RankedLogit>& list) {
    json arr = json::array();
    for (const auto& r : list) arr.push_back({{"rank", r.rank}, {"class_id", r.class_id}, {"class", r.name}, {"logit", r.logit}});
    return arr;
  };
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"rank", r.rank},
                    {"class_id", r.class_id},
                    {"class", r.name},
                    {"logit_before", r.logit_before},
                    {"logit_after", r.logit_after},
                    {"change", r.change}});
  }
  json j = {{"k_percent", report.k_percent},
            {"target_class", report.target_class},
            {"num_ablated", report.ablated_token_ids.size()},
            {"ablated_token_ids", report.ablated_token_ids},
            {"top5_before", ranked(report.top5_before)},
            {"top5_after", ranked(report.top5_after)},
            {"rows", rows},
            {"logit_change", std::vector<float>(report.logit_change.values().begin(), report.logit_change.values().end())}};
  return j.dump(2) + "\n";
}

std::string dla_json(const observe::DlaReport& dla, const model::ModelConfig& config) {
  using nlohmann::json;
  json layers = json::array();
  for (std::size_t l = 0; l < dla.attn_contrib.size(); ++l) {
    layers.push_back({{"layer", l}, {"attn", dla.attn_contrib[l]}, {"mlp", dla.mlp_contrib[l]}});
  }
  json j = {{"target_class", dla.target_class},
            {"class", config.class_name(dla.target_class)},
            {"embed", dla.embed_contrib},
            {"layers", layers},
            {"bias_terms", dla.bias_terms},
            {"reconstructed_logit", dla.reconstructed_logit},
            {"actual_logit", dla.actual_logit}};
  return j.dump(2) + "\n";
}

}  // namespace vvlab::report
