#include "vvlab/config.hpp"

#include <json.hpp>

#include "vvlab/error.hpp"
#include "json_util.hpp"

namespace vvlab::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("model config: " + msg); };
  if (num_layers == 0) fail("num_layers must be positive");
  if (num_heads == 0 || d_model == 0 || d_mlp == 0) fail("num_heads, d_model, d_mlp must be positive");
  if (d_model % num_heads != 0) {
    fail("d_model " + std::to_string(d_model) + " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (num_classes == 0) fail("num_classes must be positive");
  if (channels == 0) fail("channels must be positive");
  if (tubelet.t == 0 || tubelet.h == 0 || tubelet.w == 0) fail("tubelet extents must be positive");
  if (frames == 0 || frames % tubelet.t != 0) {
    fail("frames " + std::to_string(frames) + " is not divisible by tubelet.t " + std::to_string(tubelet.t));
  }
  if (image_size == 0 || image_size % tubelet.h != 0 || image_size % tubelet.w != 0) {
    fail("image_size " + std::to_string(image_size) + " is not divisible by the tubelet spatial size");
  }
  if (!(ln_eps > 0.0f)) fail("ln_eps must be positive");
  if (!class_names.empty() && class_names.size() != num_classes) fail("class_names must list num_classes names");
}

TokenGrid ModelConfig::grid() const {
  return {frames / tubelet.t, image_size / tubelet.h, image_size / tubelet.w};
}

std::string ModelConfig::class_name(std::size_t id) const {
  if (id < class_names.size()) return class_names[id];
  return "class_" + std::to_string(id);
}

ModelConfig desk_config() {
  ModelConfig c;
  c.class_names = {"bowling", "bouncing", "sweeping", "colliding"};
  return c;
}

ModelConfig full_scale_config() {
  ModelConfig c;
  c.num_layers = 12;
  c.num_heads = 12;
  c.d_model = 768;
  c.d_mlp = 3072;
  c.num_classes = 400;
  c.frames = 32;
  c.image_size = 224;
  c.channels = 3;
  c.tubelet = {2, 16, 16};
  c.ln_eps = 1e-6f;
  return c;
}

std::string gelu_name(GeluVariant v) { return v == GeluVariant::Erf ? "erf" : "tanh"; }

GeluVariant parse_gelu(const std::string& name) {
  if (name == "tanh") return GeluVariant::Tanh;
  if (name == "erf") return GeluVariant::Erf;
  throw ConfigError("unknown gelu variant '" + name + "' (expected tanh or erf)");
}

namespace detail {

nlohmann::json config_to_json_value(const ModelConfig& c) {
  nlohmann::json j;
  j["num_layers"] = c.num_layers;
  j["num_heads"] = c.num_heads;
  j["d_model"] = c.d_model;
  j["d_mlp"] = c.d_mlp;
  j["num_classes"] = c.num_classes;
  j["frames"] = c.frames;
  j["image_size"] = c.image_size;
  j["channels"] = c.channels;
  j["tubelet"] = {c.tubelet.t, c.tubelet.h, c.tubelet.w};
  j["ln_eps"] = static_cast<double>(c.ln_eps);
  j["gelu"] = gelu_name(c.gelu);
  if (!c.class_names.empty()) j["class_names"] = c.class_names;
  return j;
}

ModelConfig config_from_json_value(const nlohmann::json& j, const ModelConfig& base) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  json_util::reject_unknown_keys(j, {"num_layers", "num_heads", "d_model", "d_mlp", "num_classes", "frames",
                                     "image_size", "channels", "tubelet", "ln_eps", "gelu", "class_names"},
                                 "model config");
  ModelConfig c = base;
  try {
    json_util::read_if(j, "num_layers", c.num_layers);
    json_util::read_if(j, "num_heads", c.num_heads);
    json_util::read_if(j, "d_model", c.d_model);
    json_util::read_if(j, "d_mlp", c.d_mlp);
    json_util::read_if(j, "num_classes", c.num_classes);
    json_util::read_if(j, "frames", c.frames);
    json_util::read_if(j, "image_size", c.image_size);
    json_util::read_if(j, "channels", c.channels);
    if (j.contains("tubelet")) {
      const auto& t = j.at("tubelet");
      if (!t.is_array() || t.size() != 3) throw ConfigError("tubelet must be [t, h, w]");
      c.tubelet = {t[0].get<std::size_t>(), t[1].get<std::size_t>(), t[2].get<std::size_t>()};
    }
    if (j.contains("ln_eps")) c.ln_eps = static_cast<float>(j.at("ln_eps").get<double>());
    if (j.contains("gelu")) c.gelu = parse_gelu(j.at("gelu").get<std::string>());
    if (j.contains("class_names")) {
      c.class_names = j.at("class_names").get<std::vector<std::string>>();
    } else if (c.num_classes != base.num_classes) {
      c.class_names.clear();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace detail

std::string config_to_json(const ModelConfig& config) { return detail::config_to_json_value(config).dump(); }

ModelConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config is not valid JSON: ") + e.what());
  }
  return detail::config_from_json_value(j, desk_config());
}

}  // namespace vvlab::model
