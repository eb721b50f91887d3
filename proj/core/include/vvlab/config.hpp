#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vvlab/ops.hpp"

namespace vvlab::model {

struct Tubelet {
  std::size_t t = 2;
  std::size_t h = 8;
  std::size_t w = 8;
  bool operator==(const Tubelet&) const = default;
};

/// Token grid [T', H', W'] produced by tubelet tokenization.
struct TokenGrid {
  std::size_t frames = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return frames * rows * cols; }
};

struct ModelConfig {
  std::size_t num_layers = 6;
  std::size_t num_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_mlp = 256;
  std::size_t num_classes = 4;
  std::size_t frames = 8;
  std::size_t image_size = 32;
  std::size_t channels = 1;
  Tubelet tubelet{};
  float ln_eps = 1e-5f;
  GeluVariant gelu = GeluVariant::Tanh;
  std::vector<std::string> class_names;  // optional; empty means "class_<id>"

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  TokenGrid grid() const;
  std::size_t num_tokens() const { return grid().size(); }   // N
  std::size_t seq_len() const { return num_tokens() + 1; }   // N + 1 (CLS at row 0)
  std::size_t head_dim() const { return d_model / num_heads; }
  std::size_t patch_dim() const { return tubelet.t * tubelet.h * tubelet.w * channels; }
  std::string class_name(std::size_t id) const;

  bool operator==(const ModelConfig&) const = default;
};

/// 6 layers, 4 heads, d_model 64, 8 frames of 32×32, tubelet 2×8×8, 4 classes.
ModelConfig desk_config();

/// The 12-layer ViT-B layout with 32 frames of 224×224 and 2×16×16 tubelets.
ModelConfig full_scale_config();

std::string gelu_name(GeluVariant v);
GeluVariant parse_gelu(const std::string& name);

/// JSON round trip (compact, sorted keys). Unknown keys are rejected.
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

}  // namespace vvlab::model
