#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vvlab/config.hpp"
#include "vvlab/tensor.hpp"
#include "vvlab/weights.hpp"

namespace vvlab::organism {

enum class Outcome : std::uint8_t { Failure = 0, Success = 1 };

std::string outcome_name(Outcome o);

/// Action classes drawn by the renderer.
enum ActionClass : int { kBowling = 0, kBouncing = 1, kSweeping = 2, kColliding = 3, kRenderableClasses = 4 };

struct VideoSpec {
  int action_class = kBowling;
  Outcome outcome = Outcome::Success;
  std::uint64_t trajectory_seed = 0;
  std::uint64_t background_seed = 0;
  float noise_std = 0.02f;
};

/// Raw-clip geometry. Defaults: 40 frames of 32×32, one channel.
struct RenderConfig {
  std::size_t frames_raw = 40;
  std::size_t image_size = 32;
  std::size_t channels = 1;

  static RenderConfig for_model(const model::ModelConfig& config, std::size_t frames_raw = 40);
  /// First frame at which a Success and a Failure clip may differ.
  std::size_t divergence_frame() const { return frames_raw / 3; }
};

struct Clip {
  Tensor video;  // [frames_raw, image, image, channels], values in [0, 1]
  int label = 0;
  Outcome outcome = Outcome::Success;
};

struct RenderedClip {
  Clip clip;
  /// [frames_raw, image, image]; 1 where a moving object (ball, disc, pin) is drawn.
  Tensor object_mask;
};

/// Deterministic procedural renderer. Bowling: a bright ball rolls up a
/// textured lane toward a pin cluster; Success hits the pins (which then
/// scatter), Failure drifts into the gutter and the pins stay put. Both
/// outcomes share every pixel before divergence_frame(). Other classes draw
/// a bouncing disc, a horizontal sweep, and two colliding discs.
/// Background texture and noise depend only on background_seed.
RenderedClip render_video(const VideoSpec& spec, const RenderConfig& config);

/// Pixels ([frames_raw, image, image], 0/1) where the two outcomes of `spec`
/// may differ: object pixels of either outcome from divergence_frame() on.
Tensor outcome_region_mask(const VideoSpec& spec, const RenderConfig& config);

/// Stride s = ⌊T/n⌋, start ~ U[0, T − (n−1)·s − 1] drawn from jitter_seed,
/// frames start + i·s.
struct FrameSelection {
  std::size_t start = 0;
  std::size_t stride = 1;
  std::vector<std::size_t> indices;
};
FrameSelection select_frames(std::size_t frames_raw, std::size_t num_frames, std::uint64_t jitter_seed);
Tensor sample_frames(const Tensor& video, std::size_t num_frames, std::uint64_t jitter_seed);

inline constexpr std::uint64_t kDefaultJitterSeed = 42;

/// Per-token flag: does the tubelet of token t (in a sampled [T,H,W] mask)
/// touch any masked pixel.
std::vector<bool> token_mask(const Tensor& sampled_mask, const model::ModelConfig& config);

struct DatasetItem {
  VideoSpec spec;
  Clip clip;
  /// Contrastive pairs (bowling only) share a pair id; -1 otherwise.
  int pair_id = -1;
};

/// n_per_class clips for each class. The bowling class holds ⌊n/2⌋ matched
/// Success/Failure pairs sharing both seeds (plus one Success clip when n is odd).
std::vector<DatasetItem> build_dataset(std::size_t n_per_class, const model::ModelConfig& config,
                                       std::uint64_t seed, float noise_std = 0.02f, std::size_t frames_raw = 40);

// -- VVC1 clip files -----------------------------------------------------------
// "VVC1" | u32 LE T,H,W,C | f32 LE payload in [0,1] | u8 label | u8 outcome (1 = Success)

std::string encode_clip(const Clip& clip);
Clip decode_clip(const std::string& bytes);
void save_clip(const std::filesystem::path& path, const Clip& clip);
Clip load_clip(const std::filesystem::path& path);

// -- training ------------------------------------------------------------------

struct TrainOptions {
  int epochs = 150;
  float lr = 1e-3f;
  std::uint64_t seed = 0;
  std::size_t batch_size = 8;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_eps = 1e-8f;
};

struct TrainResult {
  model::Weights weights;
  std::vector<double> loss_curve;  // mean loss per epoch, measured before each batch update
};

/// Model-ready input for dataset entry `index` under training seed `seed`.
Tensor training_frames(const Clip& clip, const model::ModelConfig& config, std::uint64_t seed, std::size_t index);

/// Mini-batch Adam on softmax cross-entropy over class labels. The outcome
/// field never enters the loss. Frame sampling is fixed per clip, so the
/// loss curve is flat when lr = 0. Throws TrainingError on a non-finite loss.
TrainResult train(const model::Weights& initial, const model::ModelConfig& config, const std::vector<Clip>& dataset,
                  const TrainOptions& options);

/// Mean cross-entropy over the dataset's training inputs.
double dataset_loss(const model::Weights& weights, const model::ModelConfig& config, const std::vector<Clip>& dataset,
                    std::uint64_t seed);

/// Fraction of clips whose argmax logit equals the label.
double train_accuracy(const model::Weights& weights, const model::ModelConfig& config,
                      const std::vector<Clip>& dataset, std::uint64_t seed);

}  // namespace vvlab::organism
