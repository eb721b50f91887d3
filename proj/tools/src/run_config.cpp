#include <fstream>
#include <json.hpp>

#include "vvlab/cli.hpp"
#include "vvlab/error.hpp"

namespace vvlab::cli {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace

organism::TrainOptions RunConfig::train_options() const {
  organism::TrainOptions o;
  o.epochs = epochs;
  o.lr = lr;
  o.seed = seed;
  o.batch_size = batch_size;
  return o;
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root, "config", {"model", "seed", "jitter_seed", "data", "train", "experiment"});
  RunConfig rc;
  if (root.contains("model")) rc.model = model::config_from_json(root["model"].dump());
  read(root, "seed", rc.seed, "config");
  read(root, "jitter_seed", rc.jitter_seed, "config");

  if (root.contains("data")) {
    const json& d = root["data"];
    reject_unknown(d, "data", {"n_per_class", "noise_std", "frames_raw"});
    read(d, "n_per_class", rc.n_per_class, "data");
    read(d, "noise_std", rc.noise_std, "data");
    read(d, "frames_raw", rc.frames_raw, "data");
  }
  if (root.contains("train")) {
    const json& t = root["train"];
    reject_unknown(t, "train", {"epochs", "lr", "batch_size"});
    read(t, "epochs", rc.epochs, "train");
    read(t, "lr", rc.lr, "train");
    read(t, "batch_size", rc.batch_size, "train");
  }
  if (root.contains("experiment")) {
    const json& x = root["experiment"];
    reject_unknown(x, "experiment",
                   {"k_percent", "target_class", "layer", "head", "component", "measure_at", "layers", "pair"});
    read(x, "k_percent", rc.k_percent, "experiment");
    read(x, "target_class", rc.target_class, "experiment");
    read(x, "layer", rc.layer, "experiment");
    read(x, "head", rc.head, "experiment");
    read(x, "pair", rc.pair, "experiment");
    std::string text;
    if (x.contains("component")) {
      read(x, "component", text, "experiment");
      rc.component = causal::parse_component(text);
    }
    if (x.contains("measure_at")) {
      read(x, "measure_at", text, "experiment");
      rc.measure_at = causal::parse_measure(text);
    }
    if (x.contains("layers")) {
      std::vector<std::size_t> range;
      read(x, "layers", range, "experiment");
      if (range.size() != 2) throw ConfigError("experiment.layers must be [first, last)");
      rc.layers_first = range[0];
      rc.layers_last = range[1];
    }
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string run_config_json(const RunConfig& rc) {
  json j;
  j["model"] = json::parse(model::config_to_json(rc.model));
  j["seed"] = rc.seed;
  j["jitter_seed"] = rc.jitter_seed;
  j["data"] = {{"n_per_class", rc.n_per_class}, {"noise_std", rc.noise_std}, {"frames_raw", rc.frames_raw}};
  j["train"] = {{"epochs", rc.epochs}, {"lr", rc.lr}, {"batch_size", rc.batch_size}};
  j["experiment"] = {{"k_percent", rc.k_percent},
                     {"target_class", rc.target_class},
                     {"layer", rc.layer},
                     {"head", rc.head},
                     {"component", causal::component_name(rc.component)},
                     {"measure_at", causal::measure_name(rc.measure_at)},
                     {"layers", {rc.layers_first, rc.layers_last.value_or(rc.model.num_layers)}},
                     {"pair", rc.pair}};
  return j.dump(2);
}

}  // namespace vvlab::cli
