#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "vvlab/config.hpp"
#include "vvlab/weights.hpp"

namespace vvlab::model {

// VVW1 weight file:
//   "VVW1" | u32 LE header length | UTF-8 JSON header | packed LE f32 payload
// Header: {"config": {...}, "ln_eps": f, "gelu": "tanh"|"erf",
//          "manifest": [{"name", "shape", "offset"}], "normalization"?: {...}}
// Offsets are byte offsets from the start of the payload.

struct LoadedWeights {
  ModelConfig config;
  Weights weights;
  /// Optional input-normalization constants recorded by an exporter.
  std::map<std::string, std::vector<double>> normalization;
};

std::string encode_weights(const ModelConfig& config, const Weights& weights);
LoadedWeights decode_weights(const std::string& bytes);

void save_weights(const std::filesystem::path& path, const ModelConfig& config, const Weights& weights);
LoadedWeights load_weights(const std::filesystem::path& path);

}  // namespace vvlab::model
