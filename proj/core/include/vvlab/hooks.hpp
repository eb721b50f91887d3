#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "vvlab/config.hpp"
#include "vvlab/tensor.hpp"

namespace vvlab::model {

/// A named seam in the forward pass.
///
/// Token-indexed hooks hold [N+1, d_model] tensors (row 0 is CLS);
/// attn_weights(l) holds [heads, N+1, N+1]; logits holds [num_classes].
/// head_out(l, h) is head h's share of attn_out(l) after the output
/// projection, so attn_out(l) = Σ_h head_out(l, h) + b_O.
struct HookPoint {
  enum class Kind {
    Embed,
    ResidPre,
    AttnWeights,
    HeadOut,
    AttnOut,
    MlpOut,
    ResidPost,
    FinalLnOut,
    Logits,
  };

  Kind kind = Kind::Embed;
  std::size_t layer = 0;
  std::size_t head = 0;

  static HookPoint embed() { return {Kind::Embed}; }
  static HookPoint resid_pre(std::size_t l) { return {Kind::ResidPre, l}; }
  static HookPoint attn_weights(std::size_t l) { return {Kind::AttnWeights, l}; }
  static HookPoint head_out(std::size_t l, std::size_t h) { return {Kind::HeadOut, l, h}; }
  static HookPoint attn_out(std::size_t l) { return {Kind::AttnOut, l}; }
  static HookPoint mlp_out(std::size_t l) { return {Kind::MlpOut, l}; }
  static HookPoint resid_post(std::size_t l) { return {Kind::ResidPost, l}; }
  static HookPoint final_ln_out() { return {Kind::FinalLnOut}; }
  static HookPoint logits() { return {Kind::Logits}; }

  bool is_layered() const;
  /// Natural tensor shape of this hook under `config`.
  Shape natural_shape(const ModelConfig& config) const;
  /// Throws ArgumentError when layer/head are out of range for `config`.
  void validate(const ModelConfig& config) const;

  std::string to_string() const;
  static HookPoint parse(const std::string& text);

  auto operator<=>(const HookPoint&) const = default;
};

using HookSet = std::set<HookPoint>;

/// Every hook the model exposes except per-head outputs.
HookSet all_hooks(const ModelConfig& config);

/// Snapshot of captured activations from one forward pass.
class ActivationCache {
 public:
  void put(const HookPoint& hook, Tensor value) { entries_[hook] = std::move(value); }
  bool contains(const HookPoint& hook) const { return entries_.count(hook) != 0; }
  /// Throws CacheError naming the hook when absent.
  const Tensor& at(const HookPoint& hook) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<HookPoint, Tensor>& entries() const { return entries_; }

 private:
  std::map<HookPoint, Tensor> entries_;
};

/// Overwrite the activation at a seam.
struct Replace {
  Tensor value;
};

/// Zero the rows of the listed tokens. Indices address non-CLS tokens
/// (0 .. N-1, mapped to sequence rows 1 .. N); CLS cannot be named.
struct ZeroTokens {
  std::vector<std::size_t> tokens;
};

struct Intervention {
  HookPoint at;
  std::variant<Replace, ZeroTokens> action;

  static Intervention replace(HookPoint at, Tensor value) { return {at, Replace{std::move(value)}}; }
  static Intervention zero_tokens(HookPoint at, std::vector<std::size_t> tokens) {
    return {at, ZeroTokens{std::move(tokens)}};
  }
};

}  // namespace vvlab::model
