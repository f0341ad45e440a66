// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <variant>
#include <vector>

namespace sylva::cli {

/// Named run parameters shared by a command's flags and its JSON config.
/// JSON keys use snake_case; the matching flag is the kebab-case form.
class ParamSet {
 public:
  using Target = std::variant<double*, int*, std::uint64_t*, std::string*, bool*, std::vector<double>*,
                              std::vector<std::string>*>;

  template <class T>
  void add(std::string key, T& target, std::string help) {
    entries_.push_back({std::move(key), &target, std::move(help), nullptr});
  }

  /// Registers one option per parameter on the subcommand.
  void bind(CLI::App& app);

  /// Loads a config file. Keys given on the command line keep their flag
  /// value. Unknown keys and type mismatches throw ConfigError.
  void apply_config(const std::filesystem::path& path);

  nlohmann::json resolved() const;

  /// Writes the resolved parameters as pretty JSON.
  void save_resolved(const std::filesystem::path& path) const;

 private:
  struct Entry {
    std::string key;
    Target target;
    std::string help;
    CLI::Option* option;
  };
  std::vector<Entry> entries_;
};

}  // namespace sylva::cli
