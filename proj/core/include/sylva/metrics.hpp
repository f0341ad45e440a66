// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sylva/field.hpp"
#include "sylva/geometry.hpp"
#include "sylva/lidar.hpp"
#include "sylva/renderer.hpp"

namespace sylva {

struct ExportConfig {
  double std_max = 0.5;
  double alpha_min = 0.5;
  int stride = 1;
  /// Use depth divided by accumulated alpha; unbiased on partially opaque rays.
  bool renormalize_depth = true;
  RenderConfig render;
};

/// Back-projects the expected ray depth of every strided pixel that passes
/// the alpha and spread filters. Points are tagged NERF and colored by the
/// rendered color.
PointCloud export_cloud(const FieldParams& params, std::span<const Camera> views, const Aabb& bounds,
                        const ExportConfig& cfg);

struct TreeDetection {
  Vec2 position = Vec2::Zero();
  Rect2 bbox;
  std::size_t support = 0;
};

struct DetectConfig {
  double cell = 0.25;
  double band_min = 0.5;
  double band_max = 2.5;
  std::size_t min_support = 5;
  double merge_radius = 1.0;

  void validate() const;
};

/// BEV occupancy clustering of the points inside the height band of a
/// ground-normalized cloud. Duplicate points count once, so the result does
/// not depend on point order or duplication. Sorted by (x, y).
std::vector<TreeDetection> detect_trees_bev(const PointCloud& cloud, const DetectConfig& cfg = {});

struct Circle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

/// Circle through three points; empty when they are (nearly) collinear.
std::optional<Circle> circle_from_points(const Vec2& a, const Vec2& b, const Vec2& c);

/// Algebraic least-squares circle (Kasa). Needs at least three non-collinear points.
std::optional<Circle> fit_circle_kasa(std::span<const Vec2> points);

struct DbhEstimate {
  Vec2 center = Vec2::Zero();
  double diameter = 0.0;
  double rms_residual = 0.0;
  std::size_t n_points = 0;
};

struct DbhConfig {
  double slice_center = 1.3;
  double slice_half_width = 0.05;
  int ransac_iters = 400;
  double inlier_tol = 0.01;
  /// Horizontal search radius around the detection.
  double search_radius = 1.0;
  /// Hypotheses with larger radii are rejected.
  double max_radius = 0.75;
  std::size_t min_points = 10;
  double min_inlier_ratio = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class DbhStatus { kOk, kInsufficientSliceSupport, kNoCircularStem };

std::string_view to_string(DbhStatus status);

struct DbhResult {
  DbhStatus status = DbhStatus::kOk;
  DbhEstimate estimate;
  bool ok() const { return status == DbhStatus::kOk; }
};

/// RANSAC over three-point circles in the breast-height slice, then an
/// algebraic refit on the inliers.
DbhResult estimate_dbh(const PointCloud& cloud, const Vec2& position, const DbhConfig& cfg = {});
inline DbhResult estimate_dbh(const PointCloud& cloud, const TreeDetection& det, const DbhConfig& cfg = {}) {
  return estimate_dbh(cloud, det.position, cfg);
}

struct GroundConfig {
  double grid_cell = 1.0;
  /// Cells whose lowest point rises more than this above the lowest point
  /// within `window` cells are treated as empty.
  double max_step = 1.0;
  int window = 2;

  void validate() const;
};

/// Ground raster sampled at cell centers.
struct GroundModel {
  Vec2 origin = Vec2::Zero();
  double cell = 1.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> heights;

  /// Bilinear interpolation, clamped at the border.
  double height_at(double x, double y) const;
};

/// Throws DataError("no ground points") on an empty cloud.
GroundModel fit_ground(const PointCloud& cloud, const GroundConfig& cfg = {});

/// Replaces z with height above the fitted ground.
PointCloud ground_normalize(const PointCloud& cloud, const GroundConfig& cfg = {});

struct PlotMetrics {
  std::string plot;
  std::size_t tree_count = 0;
  std::vector<TreeDetection> detections;
  std::vector<DbhEstimate> dbh;
  /// Parallel to detections.
  std::vector<DbhStatus> dbh_status;
  std::vector<std::string> provenance;
};

/// Detection plus per-detection DBH on a ground-normalized cloud.
PlotMetrics compute_plot_metrics(const PointCloud& normalized, const DetectConfig& detect, const DbhConfig& dbh,
                                 std::string plot = {});

/// Root mean squared count error. Throws ConfigError on a length mismatch.
double evaluate_counts(std::span<const std::size_t> pred, std::span<const std::size_t> truth);
double evaluate_counts(std::span<const PlotMetrics> pred, std::span<const std::size_t> truth);

/// Mean of |d_hat - d| / d * 100. Throws ConfigError on a length mismatch or zero truth.
double evaluate_dbh(std::span<const double> pred, std::span<const double> truth);
double evaluate_dbh(std::span<const DbhEstimate> pred, std::span<const double> truth);

/// One JSON record per plot (see docs/formats.md).
void write_report_jsonl(std::span<const PlotMetrics> plots, const std::filesystem::path& path);
std::vector<PlotMetrics> read_report_jsonl(const std::filesystem::path& path);
/// plot,tree_count,n_dbh,mean_dbh_m,mean_rms_m
void write_report_csv(std::span<const PlotMetrics> plots, const std::filesystem::path& path);

}  // namespace sylva
