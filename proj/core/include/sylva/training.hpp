// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sylva/field.hpp"
#include "sylva/geometry.hpp"
#include "sylva/image.hpp"
#include "sylva/lidar.hpp"
#include "sylva/renderer.hpp"

namespace sylva {

/// A training ray with its observed color and, when a LiDAR return projects
/// onto the pixel, the range along the ray.
struct RaySupervision {
  Ray ray;
  Vec3 color = Vec3::Zero();
  double depth_prior = 0.0;
  bool prior_valid = false;
};

struct TrainConfig {
  double learning_rate = 5e-3;
  /// Exponential decay target reached at the last iteration.
  double learning_rate_final = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-15;
  int batch_rays = 1024;
  /// Total step count; a resumed run continues until the counter reaches it.
  int iterations = 1000;
  double lambda_depth = 0.1;
  /// Linear ramp of lambda over this fraction of the run.
  double lambda_warmup = 0.1;
  int n_coarse = 64;
  int n_fine = 64;
  std::uint64_t seed = 0;
  std::optional<Vec3> background;
  /// Composite every training ray over a fresh uniform random color instead
  /// of `background`, so partial transparency cannot be absorbed into color.
  bool random_background = false;
  Precision precision = Precision::kF64;
  int threads = 1;

  void validate() const;
  RenderConfig render_config() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

struct TrainLogEntry {
  std::uint64_t iteration = 0;
  double loss_color = 0.0;
  double loss_depth = 0.0;
  double loss_total = 0.0;
  double ms = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;

  /// CSV columns: iteration,L_C,L_D,total,ms. With include_time false the ms
  /// column is written as 0 so reruns are byte-identical.
  void save_csv(const std::filesystem::path& path, bool include_time = true) const;
};

struct PhotometricLoss {
  double value = 0.0;
  std::vector<Vec3> d_color;
};

struct DepthLoss {
  double value = 0.0;
  std::vector<double> d_depth;
};

/// sum ||C - C_hat||^2 with gradient 2 (C_hat - C).
PhotometricLoss photometric_loss(std::span<const RenderResult> preds, std::span<const Vec3> targets);
/// sum over rays with a prior of (z - z_hat)^2; rays without one contribute 0.
DepthLoss depth_loss(std::span<const RenderResult> preds, std::span<const std::optional<double>> priors);
double total_loss(double loss_color, double loss_depth, double lambda);

/// Bias-corrected ADAM update in place; increments state.step.
void adam_step(FieldParams& params, const ParamGradients& grads, AdamState& state, const TrainConfig& cfg,
               double learning_rate);

struct TrainingView {
  Image image;
  CameraIntrinsics intrinsics;
  PoseSE3 pose;
};

struct SupervisionConfig {
  /// Rays are clipped to these bounds; pixels whose ray misses them are skipped.
  Aabb bounds;
  double splat_radius_px = 1.0;
};

/// One supervision per pixel. With a cloud, every point is splatted into
/// every view; a pixel within the splat radius takes the point's range along
/// the pixel ray, nearest point winning.
std::vector<RaySupervision> build_supervision(std::span<const TrainingView> views, const PointCloud* cloud,
                                              const SupervisionConfig& cfg);

struct LossEvaluation {
  double loss_color = 0.0;
  double loss_depth = 0.0;
  double total = 0.0;
  std::vector<RenderResult> renders;
  ParamGradients grads;
};

/// Full objective L_C + lambda L_D over the given rays, with dL/dTheta when requested.
/// `backgrounds`, when non-empty, holds one background color per ray.
LossEvaluation evaluate_loss(const FieldParams& params, std::span<const RaySupervision> batch,
                             const RenderConfig& render, double lambda, bool with_grad = true,
                             std::uint64_t stream = 0, std::span<const Vec3> backgrounds = {});

struct TrainProgress {
  std::uint64_t iteration;
  const FieldParams& params;
  const AdamState& state;
  const TrainLogEntry& entry;
};

struct TrainResult {
  FieldParams params;
  AdamState state;
  TrainLog log;
};

/// Runs ADAM on L_C + lambda L_D from `init` (or from `resume`). Throws
/// NumericalError when the loss becomes non-finite.
TrainResult train(std::span<const RaySupervision> supervisions, const TrainConfig& cfg, FieldParams init,
                  std::optional<AdamState> resume = std::nullopt,
                  const std::function<void(const TrainProgress&)>& on_step = {});

/// Optimizer state file; byte layout in docs/formats.md.
void save_adam_state(const AdamState& state, const std::filesystem::path& path);
AdamState load_adam_state(const std::filesystem::path& path);

}  // namespace sylva
