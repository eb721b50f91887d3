#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vvlab/causal.hpp"
#include "vvlab/config.hpp"
#include "vvlab/observe.hpp"
#include "vvlab/tensor.hpp"

namespace vvlab::report {

// -- CSV (LF line endings, %.6f) -------------------------------------------------

std::string delta_csv(const causal::DeltaCurve& curve);          // layer,avg_l2,cls_l2
std::string recovery_csv(const causal::RecoveryTable& table);    // layer,component,recovery_percent
/// layer,component,value; embed and bias rows use layer -1.
std::string dla_csv(const observe::DlaReport& dla);
std::string probe_csv(const std::vector<observe::ProbeResult>& probes);
std::string loss_csv(const std::vector<double>& loss_curve);     // epoch,loss (1-based epochs)
/// token,frame,row,col,score
std::string token_csv(const observe::TokenScores& scores);

// -- JSON (sorted keys, full precision) ------------------------------------------

std::string ablation_json(const causal::AblationReport& report);
std::string dla_json(const observe::DlaReport& dla, const model::ModelConfig& config);

// -- images ------------------------------------------------------------------------

/// Min-max normalization of a grid to 0..255; a constant grid maps to 128.
std::vector<std::uint8_t> normalize_to_bytes(const Tensor& grid);

/// Binary PGM (P5, maxval 255) of a [rows, cols] grid after normalize_to_bytes.
std::string encode_heatmap(const Tensor& grid);

/// Binary PPM (P6): the grid is normalized, upsampled to the frame by nearest
/// neighbour and blended into the red channel:
///   out = (1 − alpha)·frame + alpha·(heat, 0, 0)
/// `frame` is [H, W] or [H, W, C] with C ∈ {1, 3} and values in [0, 1].
std::string encode_overlay(const Tensor& frame, const Tensor& grid, float alpha = 0.5f);

/// Frame t of a [T', H', W'] grid as [H', W'].
Tensor grid_frame(const Tensor& grid, std::size_t t);

// -- experiment bundles ------------------------------------------------------------

enum class ArtifactKind {
  DeltaCsv,
  RecoveryCsv,
  AblationJson,
  DlaJson,
  HeatmapPgm,
  OverlayPpm,
  ProbeCsv,
  LossCsv,
  DlaCsv,
  TokenCsv,
  Clip,
  Weights,
};

std::string kind_name(ArtifactKind kind);

struct Artifact {
  ArtifactKind kind;
  std::string path;  // relative to the bundle root, '/'-separated
  std::string sha256;
  std::size_t bytes = 0;
};

struct ExperimentBundle {
  std::filesystem::path root;
  std::vector<Artifact> artifacts;
  std::string manifest_json;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Collects artifacts in memory and writes them in one step.
class BundleBuilder {
 public:
  void set_command(std::string command) { command_ = std::move(command); }
  /// Effective run configuration as a JSON object.
  void set_config_json(std::string json) { config_json_ = std::move(json); }
  void set_seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  /// Records an input file (or directory) and its SHA-256 digest, read now.
  void add_input(const std::string& label, const std::filesystem::path& path);

  /// Throws ArgumentError on a duplicate or unsafe relative path.
  void add(ArtifactKind kind, const std::string& relative_path, std::string bytes);

  std::size_t size() const { return pending_.size(); }

  /// Writes every artifact and manifest.json into a staging directory next
  /// to `output_dir`, then swaps it into place. On failure nothing is left
  /// behind and a pre-existing `output_dir` is untouched. Throws IoError.
  ExperimentBundle emit(const std::filesystem::path& output_dir) const;

 private:
  struct Pending {
    ArtifactKind kind;
    std::string path;
    std::string bytes;
  };
  std::string command_;
  std::string config_json_ = "{}";
  std::map<std::string, std::uint64_t> seeds_;
  std::map<std::string, std::pair<std::string, std::string>> inputs_;  // label -> (path, digest)
  std::vector<Pending> pending_;
};

}  // namespace vvlab::report
