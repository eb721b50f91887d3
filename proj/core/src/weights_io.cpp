#include "vvlab/weights_io.hpp"

#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "json_util.hpp"
#include "vvlab/error.hpp"

namespace vvlab::model {
namespace {

constexpr std::string_view kMagicStem = "VVW";
constexpr char kVersion = '1';

LoadError manifest_error(const std::string& msg) { return LoadError(LoadError::Kind::Manifest, "VVW1 manifest: " + msg); }

}  // namespace

std::string encode_weights(const ModelConfig& config, const Weights& weights) {
  check_shapes(weights, config);
  nlohmann::json header;
  header["config"] = detail::config_to_json_value(config);
  header["ln_eps"] = static_cast<double>(config.ln_eps);
  header["gelu"] = gelu_name(config.gelu);
  header["version"] = 1;
  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : parameters(weights)) {
    manifest.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}});
    offset += t->size() * sizeof(float);
  }
  header["manifest"] = std::move(manifest);
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(8 + header_text.size() + offset);
  out.append(kMagicStem);
  out.push_back(kVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.append(header_text);
  for (const auto& [name, t] : parameters(weights)) {
    for (float v : t->values()) binary::put_f32(out, v);
  }
  return out;
}

LoadedWeights decode_weights(const std::string& bytes) {
  using Kind = LoadError::Kind;
  if (bytes.size() < 4 || std::string_view(bytes).substr(0, 3) != kMagicStem) {
    throw LoadError(Kind::BadMagic, "not a VVW weight file (bad magic)");
  }
  if (bytes[3] != kVersion) {
    throw LoadError(Kind::VersionMismatch,
                    std::string("unsupported VVW version '") + bytes[3] + "', this build reads version 1");
  }
  if (bytes.size() < 8) throw LoadError(Kind::Truncated, "VVW1 file truncated inside the header length");
  const std::size_t header_len = binary::get_u32(bytes, 4);
  if (bytes.size() < 8 + header_len) throw LoadError(Kind::Truncated, "VVW1 file truncated inside the JSON header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw manifest_error(std::string("header is not valid JSON: ") + e.what());
  }
  if (header.contains("version") && header["version"] != 1) {
    throw LoadError(Kind::VersionMismatch, "VVW1 header declares version " + header["version"].dump());
  }
  for (const char* key : {"config", "manifest"}) {
    if (!header.contains(key)) throw manifest_error(std::string("header lacks '") + key + "'");
  }

  LoadedWeights out;
  try {
    nlohmann::json cfg = header["config"];
    // Top-level conventions take precedence over values echoed inside config.
    if (header.contains("ln_eps")) cfg["ln_eps"] = header["ln_eps"];
    if (header.contains("gelu")) cfg["gelu"] = header["gelu"];
    out.config = detail::config_from_json_value(cfg, desk_config());
  } catch (const ConfigError& e) {
    throw manifest_error(e.what());
  }
  if (header.contains("normalization")) {
    try {
      out.normalization = header["normalization"].get<std::map<std::string, std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
      throw manifest_error(std::string("normalization: ") + e.what());
    }
  }

  const std::string_view payload = std::string_view(bytes).substr(8 + header_len);
  out.weights = zeros_like(out.config);
  auto params = parameters(out.weights);
  std::map<std::string, Tensor*> by_name;
  for (auto& [name, t] : params) by_name.emplace(name, t);

  std::set<std::string> seen;
  const auto& manifest = header["manifest"];
  if (!manifest.is_array()) throw manifest_error("'manifest' must be an array");
  for (const auto& entry : manifest) {
    std::string name;
    Shape shape;
    std::size_t offset = 0;
    try {
      name = entry.at("name").get<std::string>();
      shape = entry.at("shape").get<Shape>();
      offset = entry.at("offset").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw manifest_error(std::string("malformed entry: ") + e.what());
    }
    auto it = by_name.find(name);
    if (it == by_name.end()) throw manifest_error("unexpected tensor '" + name + "'");
    if (!seen.insert(name).second) throw manifest_error("tensor '" + name + "' listed twice");
    Tensor& dst = *it->second;
    if (shape != dst.shape()) {
      throw manifest_error("tensor '" + name + "' has shape " + shape_to_string(shape) + ", config implies " +
                           shape_to_string(dst.shape()));
    }
    if (offset % sizeof(float) != 0) throw manifest_error("tensor '" + name + "' has unaligned offset");
    const std::size_t nbytes = dst.size() * sizeof(float);
    if (offset + nbytes > payload.size()) {
      throw LoadError(Kind::Truncated, "VVW1 payload truncated: tensor '" + name + "' needs bytes [" +
                                           std::to_string(offset) + ", " + std::to_string(offset + nbytes) +
                                           ") of " + std::to_string(payload.size()));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = binary::get_f32(payload, offset + i * sizeof(float));
  }
  for (const auto& [name, t] : params) {
    if (!seen.count(name)) throw manifest_error("missing tensor '" + name + "'");
    if (!t->all_finite()) throw manifest_error("tensor '" + name + "' contains non-finite values");
  }
  return out;
}

void save_weights(const std::filesystem::path& path, const ModelConfig& config, const Weights& weights) {
  binary::write_file(path, encode_weights(config, weights));
}

LoadedWeights load_weights(const std::filesystem::path& path) { return decode_weights(binary::read_file(path)); }

}  // namespace vvlab::model
