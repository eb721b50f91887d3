#pragma once

// Internal helpers shared by the JSON-speaking translation units.

#include <algorithm>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "vvlab/config.hpp"
#include "vvlab/error.hpp"

namespace vvlab::json_util {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace vvlab::json_util

namespace vvlab::model::detail {

nlohmann::json config_to_json_value(const ModelConfig& c);
ModelConfig config_from_json_value(const nlohmann::json& j, const ModelConfig& base);

}  // namespace vvlab::model::detail
