// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sylva {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Pinhole intrinsics. Image origin is the top-left corner, u grows right,
/// v grows down, and pixel centers sit at half-integers.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws ConfigError when a field violates fx, fy > 0 or 0 < cx < width, 0 < cy < height.
  void validate() const;

  /// Intrinsics with the principal point at the image center and the given
  /// horizontal field of view.
  static CameraIntrinsics from_fov(int width, int height, double hfov_deg);
};

/// Rigid transform x -> R x + t. For cameras this is camera-to-world: the
/// camera looks down its local +z axis and `translation` is its center.
struct PoseSE3 {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static PoseSE3 identity() { return {}; }
  static PoseSE3 from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static PoseSE3 from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& t = Vec3::Zero());
  /// Row-major 4x4 homogeneous matrix; the last row must be (0, 0, 0, 1).
  static PoseSE3 from_matrix(const Mat4& m);
  /// Camera at `eye` looking at `target`; image "up" follows -`up` so v grows downward.
  static PoseSE3 look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

  Mat4 matrix() const;
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  /// Throws ConfigError unless the rotation is orthonormal with det +1 (within 1e-9).
  void validate(double tol = 1e-9) const;
};

/// (a o b)(p) = a(b(p)).
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 invert(const PoseSE3& p);
std::vector<Vec3> apply_rigid(const PoseSE3& p, std::span<const Vec3> points);

/// Rotation angle of R in radians, in [0, pi].
double rotation_angle(const Mat3& r);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();

  Vec3 at(double t) const { return origin + t * direction; }
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;

  /// Center of integer pixel (x, y).
  static PixelCoord center_of(int x, int y) { return {x + 0.5, y + 0.5}; }
};

/// Origin at the camera center, direction = normalize(R K^-1 [u, v, 1]).
/// Throws NumericalError("degenerate pixel ray") for a zero direction and
/// ConfigError for invalid intrinsics, pose, or bounds.
Ray ray_from_pixel(const CameraIntrinsics& intr, const PoseSE3& pose, const PixelCoord& px,
                   double t_near, double t_far);

/// Projects a world point into the image. Empty when the point is behind the camera.
/// The pair is (pixel coordinate, camera-frame depth along +z).
std::optional<std::pair<PixelCoord, double>> project(const CameraIntrinsics& intr,
                                                     const PoseSE3& pose, const Vec3& world);

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  /// Slab test; returns [t0, t1] clipped to t >= 0, or empty on a miss.
  std::optional<std::pair<double, double>> intersect(const Vec3& origin, const Vec3& direction) const;
};

/// Ray through the pixel clipped to the box; empty when it misses.
std::optional<Ray> ray_in_bounds(const CameraIntrinsics& intr, const PoseSE3& pose,
                                 const PixelCoord& px, const Aabb& bounds);

/// A single camera: intrinsics plus camera-to-world pose.
struct Camera {
  CameraIntrinsics intrinsics;
  PoseSE3 pose;
};

/// One camera of a capture: shared intrinsics, per-frame pose, image path
/// relative to the camera file.
struct CameraFrame {
  PoseSE3 pose;
  std::string image;
  std::string depth;
};

struct CameraRig {
  CameraIntrinsics intrinsics;
  std::vector<CameraFrame> frames;
  std::optional<Aabb> bounds;
};

/// Camera file IO (JSON, see docs/formats.md). Throws DataError on malformed input.
CameraRig load_camera_rig(const std::filesystem::path& path);
void save_camera_rig(const CameraRig& rig, const std::filesystem::path& path);

}  // namespace sylva
