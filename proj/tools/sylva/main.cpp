// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "commands.hpp"
#include "sylva/error.hpp"

namespace {

int exit_code(sylva::ErrorKind kind) {
  switch (kind) {
    case sylva::ErrorKind::kConfig:
      return 2;
    case sylva::ErrorKind::kData:
      return 3;
    case sylva::ErrorKind::kNumerical:
      return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sylva: radiance fields and LiDAR for forest plots"};
  app.require_subcommand(1);
  sylva::cli::Context ctx;
  app.add_option("--threads", ctx.threads, "worker threads; 0 uses every core")->capture_default_str();
  app.add_flag("--reproducible", ctx.reproducible, "single thread and timing-free logs");
  auto commands = sylva::cli::add_commands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& cmd : commands) {
      if (cmd->app->parsed()) cmd->run(ctx);
    }
  } catch (const sylva::Error& e) {
    std::fprintf(stderr, "sylva: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sylva: %s\n", e.what());
    return 1;
  }
  return 0;
}
