#include "vvlab/hooks.hpp"

#include <charconv>

#include "vvlab/error.hpp"

namespace vvlab::model {

bool HookPoint::is_layered() const {
  switch (kind) {
    case Kind::Embed:
    case Kind::FinalLnOut:
    case Kind::Logits:
      return false;
    default:
      return true;
  }
}

Shape HookPoint::natural_shape(const ModelConfig& config) const {
  switch (kind) {
    case Kind::AttnWeights:
      return {config.num_heads, config.seq_len(), config.seq_len()};
    case Kind::Logits:
      return {config.num_classes};
    default:
      return {config.seq_len(), config.d_model};
  }
}

void HookPoint::validate(const ModelConfig& config) const {
  if (is_layered() && layer >= config.num_layers) {
    throw ArgumentError("hook " + to_string() + ": layer out of range (model has " +
                        std::to_string(config.num_layers) + " layers)");
  }
  if (kind == Kind::HeadOut && head >= config.num_heads) {
    throw ArgumentError("hook " + to_string() + ": head out of range (model has " + std::to_string(config.num_heads) +
                        " heads)");
  }
}

std::string HookPoint::to_string() const {
  const std::string l = std::to_string(layer);
  switch (kind) {
    case Kind::Embed: return "embed";
    case Kind::ResidPre: return "blocks." + l + ".resid_pre";
    case Kind::AttnWeights: return "blocks." + l + ".attn_weights";
    case Kind::HeadOut: return "blocks." + l + ".head_out." + std::to_string(head);
    case Kind::AttnOut: return "blocks." + l + ".attn_out";
    case Kind::MlpOut: return "blocks." + l + ".mlp_out";
    case Kind::ResidPost: return "blocks." + l + ".resid_post";
    case Kind::FinalLnOut: return "final_ln_out";
    case Kind::Logits: return "logits";
  }
  return "?";
}

HookPoint HookPoint::parse(const std::string& text) {
  if (text == "embed") return embed();
  if (text == "final_ln_out") return final_ln_out();
  if (text == "logits") return logits();
  auto bad = [&] { return ArgumentError("unrecognized hook point '" + text + "'"); };
  constexpr std::string_view prefix = "blocks.";
  if (!text.starts_with(prefix)) throw bad();
  const char* begin = text.data() + prefix.size();
  const char* end = text.data() + text.size();
  std::size_t layer = 0;
  auto [p, ec] = std::from_chars(begin, end, layer);
  if (ec != std::errc() || p == end || *p != '.') throw bad();
  const std::string rest(p + 1, end);
  if (rest == "resid_pre") return resid_pre(layer);
  if (rest == "attn_weights") return attn_weights(layer);
  if (rest == "attn_out") return attn_out(layer);
  if (rest == "mlp_out") return mlp_out(layer);
  if (rest == "resid_post") return resid_post(layer);
  constexpr std::string_view head_prefix = "head_out.";
  if (rest.starts_with(head_prefix)) {
    std::size_t head = 0;
    const char* hb = rest.data() + head_prefix.size();
    const char* he = rest.data() + rest.size();
    auto [hp, hec] = std::from_chars(hb, he, head);
    if (hec == std::errc() && hp == he) return head_out(layer, head);
  }
  throw bad();
}

HookSet all_hooks(const ModelConfig& config) {
  HookSet hooks{HookPoint::embed(), HookPoint::final_ln_out(), HookPoint::logits()};
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    hooks.insert(HookPoint::resid_pre(l));
    hooks.insert(HookPoint::attn_weights(l));
    hooks.insert(HookPoint::attn_out(l));
    hooks.insert(HookPoint::mlp_out(l));
    hooks.insert(HookPoint::resid_post(l));
  }
  return hooks;
}

const Tensor& ActivationCache::at(const HookPoint& hook) const {
  auto it = entries_.find(hook);
  if (it == entries_.end()) throw CacheError("activation cache lacks hook " + hook.to_string());
  return it->second;
}

}  // namespace vvlab::model
