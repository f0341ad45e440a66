// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "params.hpp"

namespace sylva::cli {

struct Context {
  int threads = 0;
  bool reproducible = false;

  /// 1 in reproducible mode, otherwise the requested count (0 = all cores).
  int worker_threads() const;
};

struct Command {
  CLI::App* app = nullptr;
  ParamSet params;
  std::string config;
  std::function<void(const Context&)> run;
};

/// Adds the synth, train, export, register, metrics and eval subcommands.
std::vector<std::unique_ptr<Command>> add_commands(CLI::App& app);

}  // namespace sylva::cli
