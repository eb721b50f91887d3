#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vvlab/causal.hpp"
#include "vvlab/config.hpp"
#include "vvlab/organism.hpp"
#include "vvlab/report.hpp"

namespace vvlab::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;       // bad flags, config or arguments
inline constexpr int kExitIo = 2;          // unreadable/unwritable files, malformed formats
inline constexpr int kExitNumerical = 3;   // degenerate pair, diverged training

/// Effective parameters of one run: the JSON config file with flag overrides applied.
struct RunConfig {
  model::ModelConfig model = model::desk_config();

  std::uint64_t seed = 0;  // data, weight init and batch order
  std::uint64_t jitter_seed = organism::kDefaultJitterSeed;

  std::size_t n_per_class = 16;
  float noise_std = 0.02f;
  std::size_t frames_raw = 40;

  int epochs = 150;
  float lr = 1e-3f;
  std::size_t batch_size = 8;

  double k_percent = 10.0;
  std::size_t target_class = 0;
  std::size_t layer = 0;
  std::size_t head = 0;
  causal::Component component = causal::Component::Mlp;
  causal::MeasureAt measure_at = causal::MeasureAt::Cls;
  std::size_t layers_first = 0;
  std::optional<std::size_t> layers_last;  // default: num_layers
  std::size_t pair = 0;                    // bowling pair used by case-study

  organism::TrainOptions train_options() const;
};

/// Parses a config file. Unknown keys anywhere are a ConfigError.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON of the effective configuration (sorted keys).
std::string run_config_json(const RunConfig& config);

/// Maps an exception to the documented exit code.
int exit_code_for(const std::exception& e);

/// Full command line (argv[0] is the program name). Messages go to `out`
/// and `err`; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// -- pipeline stages -------------------------------------------------------------
// Each stage adds its artifacts to a bundle; the CLI writes the bundle once.

struct ContrastivePair {
  organism::Clip strike;  // Success
  organism::Clip gutter;  // Failure
};

/// Bowling pairs in dataset order: the k-th Success clip with the k-th Failure clip.
std::vector<ContrastivePair> bowling_pairs(const std::vector<organism::Clip>& clips);

/// Model input for a clip under the run's jitter seed.
Tensor model_input(const organism::Clip& clip, const RunConfig& config);

/// Clips of a gen-data directory in file-name order.
std::vector<organism::Clip> load_clip_dir(const std::filesystem::path& dir);

void stage_gen_data(const std::vector<organism::DatasetItem>& items, const RunConfig& config,
                    report::BundleBuilder& bundle);
void stage_dla(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
               report::BundleBuilder& bundle, const std::string& prefix = "");
void stage_tokens(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
                  report::BundleBuilder& bundle, const std::string& prefix = "");
void stage_attention(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
                     report::BundleBuilder& bundle, const std::string& prefix = "");
void stage_probe(const std::vector<ContrastivePair>& pairs, const model::Weights& weights, const RunConfig& config,
                 report::BundleBuilder& bundle);
void stage_delta(const organism::Clip& strike, const organism::Clip& gutter, const model::Weights& weights,
                 const RunConfig& config, report::BundleBuilder& bundle);
void stage_ablate(const organism::Clip& clip, const model::Weights& weights, const RunConfig& config,
                  report::BundleBuilder& bundle, const std::string& name = "ablation.json");
void stage_sweep(const organism::Clip& src, const organism::Clip& dst, const model::Weights& weights,
                 const RunConfig& config, report::BundleBuilder& bundle, bool single_layer);

}  // namespace vvlab::cli
