#include <algorithm>
#include <cstdio>

#include "vvlab/cli.hpp"
#include "vvlab/error.hpp"
#include "vvlab/model.hpp"

namespace vvlab::cli {
namespace {

std::string indexed(const char* pattern, std::size_t a, std::size_t b = 0, std::size_t c = 0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// Sampled frame `index` of a [T, H, W, C] model input as [H, W, C].
Tensor input_frame(const Tensor& video, std::size_t index) {
  const std::size_t plane = video.size() / video.dim(0);
  return Tensor({video.dim(1), video.dim(2), video.dim(3)},
                std::vector<float>(video.data() + index * plane, video.data() + (index + 1) * plane));
}

// One PGM heatmap and one PPM overlay per tubelet frame.
void add_grid_images(const Tensor& grid, const Tensor& video, const model::ModelConfig& cfg,
                     const std::string& stem, report::BundleBuilder& bundle) {
  for (std::size_t t = 0; t < grid.dim(0); ++t) {
    const Tensor frame_grid = report::grid_frame(grid, t);
    bundle.add(report::ArtifactKind::HeatmapPgm, stem + indexed("_f%zu.pgm", t), report::encode_heatmap(frame_grid));
    bundle.add(report::ArtifactKind::OverlayPpm, stem + indexed("_f%zu.ppm", t),
               report::encode_overlay(input_frame(video, t * cfg.tubelet.t), frame_grid, 0.5f));
  }
}

}  // namespace

Tensor model_input(const organism::Clip& clip, const RunConfig& config) {
  return organism::sample_frames(clip.video, config.model.frames, config.jitter_seed);
}

std::vector<ContrastivePair> bowling_pairs(const std::vector<organism::Clip>& clips) {
  std::vector<const organism::Clip*> strikes, gutters;
  for (const auto& c : clips) {
    if (c.label != organism::kBowling) continue;
    (c.outcome == organism::Outcome::Success ? strikes : gutters).push_back(&c);
  }
  std::vector<ContrastivePair> pairs;
  for (std::size_t i = 0; i < std::min(strikes.size(), gutters.size()); ++i) pairs.push_back({*strikes[i], *gutters[i]});
  return pairs;
}

std::vector<organism::Clip> load_clip_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("clip directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".vvc1") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .vvc1 clips under " + dir.string());
  std::vector<organism::Clip> clips;
  for (const auto& f : files) clips.push_back(organism::load_clip(f));
  return clips;
}

void stage_gen_data(const std::vector<organism::DatasetItem>& items, const RunConfig& config,
                    report::BundleBuilder& bundle) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& clip = items[i].clip;
    const std::string cls = config.model.class_name(static_cast<std::size_t>(clip.label));
    bundle.add(report::ArtifactKind::Clip,
               "clips/" + indexed("%03zu", i) + "_" + cls + "_" + organism::outcome_name(clip.outcome) + ".vvc1",
               organism::encode_clip(clip));
  }
}

void stage_dla(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
               report::BundleBuilder& bundle, const std::string& prefix) {
  const auto run = model::forward(model_input(clip, config), weights, config.model, {},
                                  observe::attribution_hooks(config.model));
  const auto dla = observe::dla_layerwise(run.cache, weights, config.model, config.target_class);
  bundle.add(report::ArtifactKind::DlaJson, prefix + "dla.json", report::dla_json(dla, config.model));
  bundle.add(report::ArtifactKind::DlaCsv, prefix + "dla.csv", report::dla_csv(dla));
}

void stage_tokens(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
                  report::BundleBuilder& bundle, const std::string& prefix) {
  const Tensor video = model_input(clip, config);
  const auto run = model::forward(video, weights, config.model, {}, observe::attribution_hooks(config.model));
  const auto scores = observe::token_contributions(run.cache, weights, config.model, config.target_class);
  bundle.add(report::ArtifactKind::TokenCsv, prefix + "tokens.csv", report::token_csv(scores));
  add_grid_images(scores.as_grid(), video, config.model, prefix + "tokens", bundle);
}

void stage_attention(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
                     report::BundleBuilder& bundle, const std::string& prefix) {
  config.model.validate();
  model::HookPoint::attn_weights(config.layer).validate(config.model);
  const Tensor video = model_input(clip, config);
  const auto run = model::forward(video, weights, config.model, {}, {model::HookPoint::attn_weights(config.layer)});
  const auto map = observe::cls_attention(run.cache, config.model, config.layer, config.head);
  add_grid_images(map.grid, video, config.model, prefix + indexed("attn_l%zu_h%zu", config.layer, config.head), bundle);
}

void stage_probe(const std::vector<ContrastivePair>& pairs, const model::Weights& weights, const RunConfig& config,
                 report::BundleBuilder& bundle) {
  if (pairs.empty()) throw ArgumentError("probe needs at least one bowling success/failure pair");
  model::HookSet hooks;
  for (std::size_t l = 0; l < config.model.num_layers; ++l) hooks.insert(model::HookPoint::resid_post(l));
  std::vector<model::ActivationCache> strike(pairs.size()), gutter(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    strike[i] = model::forward(model_input(pairs[i].strike, config), weights, config.model, {}, hooks).cache;
    gutter[i] = model::forward(model_input(pairs[i].gutter, config), weights, config.model, {}, hooks).cache;
  }
  std::vector<observe::ProbeResult> results;
  observe::ProbeOptions options;
  options.seed = config.seed;
  for (std::size_t l = 0; l < config.model.num_layers; ++l) {
    results.push_back(observe::probe_layerwise(strike, gutter, l, options));
  }
  bundle.add(report::ArtifactKind::ProbeCsv, "probe.csv", report::probe_csv(results));
}

void stage_delta(const organism::Clip& strike, const organism::Clip& gutter, const model::Weights& weights,
                 const RunConfig& config, report::BundleBuilder& bundle) {
  model::HookSet hooks;
  for (std::size_t l = 0; l < config.model.num_layers; ++l) hooks.insert(model::HookPoint::resid_post(l));
  const auto a = model::forward(model_input(strike, config), weights, config.model, {}, hooks);
  const auto b = model::forward(model_input(gutter, config), weights, config.model, {}, hooks);
  bundle.add(report::ArtifactKind::DeltaCsv, "delta.csv",
             report::delta_csv(causal::delta_analysis(a.cache, b.cache, config.model)));
}

void stage_ablate(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
                  report::BundleBuilder& bundle, const std::string& name) {
  const auto rep = causal::topk_ablation(model_input(clip, config), weights, config.model, config.k_percent,
                                         config.target_class);
  bundle.add(report::ArtifactKind::AblationJson, name, report::ablation_json(rep));
}

void stage_sweep(const organism::Clip& src, const organism::Clip& dst, const model::Weights& weights,
                 const RunConfig& config, report::BundleBuilder& bundle, bool single_layer) {
  const causal::PatchExperiment experiment(model_input(src, config), model_input(dst, config), weights, config.model,
                                           config.measure_at);
  causal::RecoveryTable table;
  if (single_layer) {
    table.push_back({config.layer, config.component, experiment.recovery(config.layer, config.component)});
  } else {
    table = experiment.sweep(config.layers_first, config.layers_last.value_or(config.model.num_layers));
  }
  bundle.add(report::ArtifactKind::RecoveryCsv, "recovery.csv", report::recovery_csv(table));
}

}  // namespace vvlab::cli
