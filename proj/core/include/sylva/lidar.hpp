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

#include "sylva/geometry.hpp"

namespace sylva {

enum class SourceTag : std::uint8_t { kALS = 0, kTLS = 1, kNERF = 2, kSYNTH = 3, kMixed = 255 };

std::string_view to_string(SourceTag tag);
/// Throws DataError for an unknown name.
SourceTag source_tag_from_string(std::string_view name);

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

struct PointCloud {
  std::vector<Vec3> points;
  /// Empty, or one color per point.
  std::vector<Rgb8> colors;
  SourceTag source = SourceTag::kSYNTH;
  std::string frame = "world";
  /// Per-point source; empty means every point carries `source`.
  std::vector<SourceTag> tags;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  SourceTag tag(std::size_t i) const { return tags.empty() ? source : tags[i]; }
  /// Throws DataError on non-finite coordinates or mismatched attribute lengths.
  void validate() const;
};

/// Binary little-endian PLY with double x/y/z, optional uchar red/green/blue
/// and an optional uchar `source` column for mixed clouds. The source tag and
/// frame go in a `comment sylva source=<TAG> frame=<name>` line.
void save_ply(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud load_ply(const std::filesystem::path& path);

struct Rect2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();
  double area() const { return std::max(0.0, max.x() - min.x()) * std::max(0.0, max.y() - min.y()); }
  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

/// Points whose horizontal projection falls in the region, per square meter.
double cloud_density(const PointCloud& cloud, const Rect2& region);

/// Concatenation keeping per-point source tags. Throws DataError when frames differ.
PointCloud merge(std::span<const PointCloud> clouds);
PointCloud filter_by_source(const PointCloud& cloud, SourceTag tag);
/// Points whose horizontal projection falls inside the region, order kept.
PointCloud crop_cloud(const PointCloud& cloud, const Rect2& region);
PointCloud transform_cloud(const PointCloud& cloud, const PoseSE3& pose);
/// Isotropic Gaussian jitter with standard deviation sigma per axis.
PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed);
/// Keeps the first point (in input order) of every occupied voxel.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel);

/// Uniform grid over a fixed point set with exact nearest-neighbor queries
/// inside a radius. Cells are visited in Chebyshev shells around the query
/// cell until no closer point can remain.
class SpatialGrid {
 public:
  SpatialGrid(std::span<const Vec3> points, double cell_size);

  struct Hit {
    std::size_t index;
    double distance_sq;
  };
  /// Nearest point within max_distance, skipping index `exclude`. Ties go to the lower index.
  std::optional<Hit> nearest(const Vec3& query, double max_distance,
                             std::optional<std::size_t> exclude = std::nullopt) const;

  /// Indices of all points within `radius` of the query, in ascending order.
  void within(const Vec3& query, double radius, std::vector<std::size_t>& out) const;

  const Vec3& point(std::size_t i) const { return points_[i]; }
  double cell_size() const { return cell_; }
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<Vec3> points_;
  double cell_;
  Vec3 origin_;
  Eigen::Vector3i dims_;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> order_;
};

/// Median nearest-neighbor distance over a deterministic subsample.
double median_spacing(std::span<const Vec3> points, std::size_t max_samples = 2000);

enum class IcpMetric {
  kPointToPoint,
  /// Residuals along target normals estimated from local neighborhoods.
  kPointToPlane,
};

struct IcpConfig {
  IcpMetric metric = IcpMetric::kPointToPoint;
  int max_iter = 60;
  /// Convergence threshold on the per-iteration update (meters and radians).
  double tol = 1e-6;
  double trim_fraction = 0.1;
  /// Correspondences beyond this distance count as unmatched.
  double max_correspondence = 1.5;
  /// Grid cell size; defaults to twice the target's median spacing.
  std::optional<double> cell_size;
  /// Neighborhood radius for target normals; defaults to four times the
  /// target's median spacing.
  std::optional<double> normal_radius;
};

struct RegistrationResult {
  PoseSE3 transform;  // source -> target
  double rms_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Trimmed, truncated RMS at the pose entering each iteration, plus the final pose.
  std::vector<double> residual_history;
};

/// ICP with trimmed, truncated correspondences. Every accepted step lowers
/// (or keeps) the objective, so residual_history never increases. Throws
/// NumericalError("unconstrained registration") when the matched set cannot
/// determine a rigid transform.
RegistrationResult coregister_icp(const PointCloud& source, const PointCloud& target, const PoseSE3& init,
                                  const IcpConfig& cfg = {});

/// Successive coregister_icp runs with the given correspondence gates (each
/// overriding cfg.max_correspondence), each starting where the last ended.
/// Iterations add up; the residual history is that of the final stage.
RegistrationResult coregister_staged(const PointCloud& source, const PointCloud& target, const PoseSE3& init,
                                     const IcpConfig& cfg, std::span<const double> gates);

}  // namespace sylva
