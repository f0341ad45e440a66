// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "params.hpp"

#include <algorithm>
#include <fstream>
#include <type_traits>

#include "sylva/error.hpp"

namespace sylva::cli {

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

}  // namespace

void ParamSet::bind(CLI::App& app) {
  for (auto& e : entries_) {
    const std::string flag = flag_name(e.key);
    e.option = std::visit(
        [&](auto* target) -> CLI::Option* {
          using T = std::remove_pointer_t<decltype(target)>;
          if constexpr (std::is_same_v<T, std::vector<double>> || std::is_same_v<T, std::vector<std::string>>) {
            return app.add_option(flag, *target, e.help)->delimiter(',')->capture_default_str();
          } else {
            return app.add_option(flag, *target, e.help)->capture_default_str();
          }
        },
        e.target);
  }
}

void ParamSet::apply_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object: " + path.string());
  for (const auto& [key, value] : j.items()) {
    const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
    if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "' in " + path.string());
    if (it->option && it->option->count() > 0) continue;
    try {
      std::visit([&](auto* target) { *target = value.get<std::remove_pointer_t<decltype(target)>>(); }, it->target);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config key '" + key + "' has the wrong type in " + path.string());
    }
  }
}

nlohmann::json ParamSet::resolved() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : entries_) std::visit([&](auto* target) { j[e.key] = *target; }, e.target);
  return j;
}

void ParamSet::save_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << resolved().dump(2) << '\n';
}

}  // namespace sylva::cli
