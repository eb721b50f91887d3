#include "seeds.hpp"
#include "vvlab/error.hpp"
#include "vvlab/organism.hpp"

namespace vvlab::organism {

std::vector<DatasetItem> build_dataset(std::size_t n_per_class, const model::ModelConfig& config, std::uint64_t seed,
                                       float noise_std, std::size_t frames_raw) {
  if (n_per_class == 0) throw ArgumentError("build_dataset: n_per_class must be at least 1");
  if (config.num_classes > kRenderableClasses) {
    throw ArgumentError("build_dataset: the renderer draws " + std::to_string(kRenderableClasses) +
                        " classes, config asks for " + std::to_string(config.num_classes));
  }
  if (frames_raw < config.frames) {
    throw ArgumentError("build_dataset: frames_raw must cover the model's " + std::to_string(config.frames) + " frames");
  }
  const RenderConfig render = RenderConfig::for_model(config, frames_raw);
  std::vector<DatasetItem> items;
  items.reserve(n_per_class * config.num_classes);

  auto make = [&](int cls, std::size_t index, Outcome outcome, int pair_id) {
    VideoSpec spec;
    spec.action_class = cls;
    spec.outcome = outcome;
    spec.trajectory_seed = seeds::mix(seed, (static_cast<std::uint64_t>(cls) << 32) | (2 * index));
    spec.background_seed = seeds::mix(seed, (static_cast<std::uint64_t>(cls) << 32) | (2 * index + 1));
    spec.noise_std = noise_std;
    items.push_back({spec, render_video(spec, render).clip, pair_id});
  };

  for (std::size_t c = 0; c < config.num_classes; ++c) {
    const int cls = static_cast<int>(c);
    if (cls == kBowling) {
      const std::size_t pairs = n_per_class / 2;
      for (std::size_t p = 0; p < pairs; ++p) {
        make(cls, p, Outcome::Success, static_cast<int>(p));
        make(cls, p, Outcome::Failure, static_cast<int>(p));
      }
      if (n_per_class % 2) make(cls, pairs, Outcome::Success, -1);
    } else {
      for (std::size_t i = 0; i < n_per_class; ++i) {
        make(cls, i, i % 2 ? Outcome::Failure : Outcome::Success, -1);
      }
    }
  }
  return items;
}

}  // namespace vvlab::organism
