// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sylva/geometry.hpp"
#include "sylva/image.hpp"
#include "sylva/lidar.hpp"

namespace sylva {

struct Range {
  double min = 0.0;
  double max = 0.0;
};

/// Smooth multiplicative color modulation; amplitude 0 gives a flat color.
struct GroundTexture {
  double amplitude = 0.0;
  double period = 1.0;
};

/// z = height + slope.x * x + slope.y * y.
struct GroundPlane {
  double height = 0.0;
  Vec2 slope = Vec2::Zero();
  Vec3 color{0.45, 0.38, 0.28};
  GroundTexture texture;

  double height_at(double x, double y) const { return height + slope.x() * x + slope.y() * y; }
  Vec3 color_at(double x, double y) const;
};

/// Vertical cylinder from base.z to base.z + height, capped at both ends.
struct Cylinder {
  Vec3 base = Vec3::Zero();
  double radius = 0.0;
  double height = 0.0;
};

struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();
};

struct TreePrimitive {
  Cylinder trunk;
  Ellipsoid canopy;
  Vec3 trunk_color{0.36, 0.24, 0.14};
  Vec3 canopy_color{0.18, 0.42, 0.16};

  double dbh() const { return 2.0 * trunk.radius; }
  /// Throws DataError unless radius > 0, height > 0 and the canopy center is above the trunk base.
  void validate() const;
};

/// Half-buried ellipsoidal terrain bump.
struct Mound {
  Ellipsoid shape;
  Vec3 color{0.42, 0.36, 0.27};
};

struct SceneDescription {
  GroundPlane ground;
  std::vector<TreePrimitive> trees;
  std::vector<Mound> mounds;
  Aabb extent;
  double spacing_min = 0.0;
  std::uint64_t seed = 0;
  Vec3 sky_color{0.62, 0.75, 0.92};

  /// Trees inside the extent and trunk axes at least spacing_min apart.
  void validate() const;
};

struct ForestOptions {
  GroundPlane ground;
  /// Canopy horizontal semi-axis = clamp(factor * height, min, cap * spacing_min).
  double canopy_radius_factor = 0.12;
  double canopy_radius_min = 0.6;
  double canopy_radius_cap = 0.42;
  /// Canopy vertical semi-axis as a fraction of tree height.
  double canopy_depth_factor = 0.3;
  int n_mounds = 0;
  Range mound_radius{1.5, 3.0};
  Range mound_height{0.3, 0.8};
  int max_attempts = 10000;
};

/// Dart-throwing stand of n_trees inside the footprint. Deterministic per
/// seed. Throws DataError("infeasible packing ...") when the attempt budget runs out.
SceneDescription generate_forest(std::uint64_t seed, const Rect2& footprint, int n_trees, double spacing_min,
                                 Range dbh_range, Range height_range, const ForestOptions& opts = {});

enum class PrimitiveKind : std::uint8_t { kGround, kTrunk, kCanopy, kMound };

struct PrimitiveRef {
  PrimitiveKind kind = PrimitiveKind::kGround;
  int index = 0;
  bool operator==(const PrimitiveRef&) const = default;
};

struct SurfaceHit {
  double distance = 0.0;
  Vec3 color = Vec3::Zero();
  PrimitiveRef primitive;
};

struct TraceOptions {
  bool skip_canopies = false;
};

/// Nearest analytic intersection in [ray.t_near, ray.t_far] with flat
/// (unshaded) surface color.
std::optional<SurfaceHit> trace_ray_exact(const SceneDescription& scene, const Ray& ray, const TraceOptions& opts = {});

/// Distance from p to the surface of the referenced primitive (first-order
/// for ellipsoids, exact for planes and cylinders).
double surface_residual(const SceneDescription& scene, const PrimitiveRef& ref, const Vec3& p);

/// True when p lies strictly inside a trunk, canopy or mound, or below ground.
bool inside_solid(const SceneDescription& scene, const Vec3& p);

struct SyntheticView {
  Image color;
  /// Distance along the unit pixel ray; +infinity for sky.
  Raster depth;
};

std::vector<SyntheticView> render_views(const SceneDescription& scene, std::span<const Camera> cameras,
                                        int threads = 1);

struct ScanResult {
  PointCloud cloud;
  /// Primitive that produced each return.
  std::vector<PrimitiveRef> hits;
  std::size_t rays_cast = 0;
};

struct AlsConfig {
  double density = 10.0;  // pulses per square meter
  double altitude = 60.0;
  std::uint64_t seed = 0;
  /// Fraction of pulses that pass through canopies.
  double porosity = 0.0;
  double range_noise = 0.0;
  /// Defaults to the scene extent footprint.
  std::optional<Rect2> region;
};

/// Nadir pulses at Poisson-distributed positions; first return only.
ScanResult simulate_als(const SceneDescription& scene, const AlsConfig& cfg);

struct TlsConfig {
  Vec3 origin = Vec3(0, 0, 1.5);
  double angular_res_deg = 0.2;
  std::uint64_t seed = 0;
  double max_range = 60.0;
  double min_elevation_deg = -90.0;
  double max_elevation_deg = 90.0;
  double range_noise = 0.0;
};

/// Spherical sweep from a static origin; first return only. Throws
/// ConfigError when the origin is inside a solid.
ScanResult simulate_tls(const SceneDescription& scene, const TlsConfig& cfg, int threads = 1);

/// Nadir cameras on an nx by ny grid at the given altitude over the footprint.
std::vector<Camera> aerial_rig(const Rect2& footprint, double altitude, int nx, int ny,
                               const CameraIntrinsics& intrinsics, double look_ahead = 0.0);

/// Cameras on a circle around `target`, all looking at it.
std::vector<Camera> orbit_rig(const Vec3& target, double radius, double height, int count,
                              const CameraIntrinsics& intrinsics, double phase_deg = 0.0);

/// Scene file IO (JSON, see docs/formats.md).
void save_scene(const SceneDescription& scene, const std::filesystem::path& path);
SceneDescription load_scene(const std::filesystem::path& path);

}  // namespace sylva
