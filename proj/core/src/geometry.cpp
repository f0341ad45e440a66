// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "sylva/geometry.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sylva/error.hpp"

namespace sylva {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ConfigError("camera intrinsics: image size must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw ConfigError("camera intrinsics: principal point must lie inside the image");
  }
}

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double hfov_deg) {
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fx = 0.5 * width / std::tan(0.5 * hfov_deg * M_PI / 180.0);
  k.fy = k.fx;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  return k;
}

PoseSE3 PoseSE3::from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& t) {
  return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), t};
}

PoseSE3 PoseSE3::from_matrix(const Mat4& m) {
  if (std::abs(m(3, 0)) > 1e-12 || std::abs(m(3, 1)) > 1e-12 || std::abs(m(3, 2)) > 1e-12 ||
      std::abs(m(3, 3) - 1.0) > 1e-12) {
    throw ConfigError("pose matrix: last row must be (0, 0, 0, 1)");
  }
  PoseSE3 p{m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  p.validate();
  return p;
}

PoseSE3 PoseSE3::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitY());
  right.normalize();
  const Vec3 down = forward.cross(right);
  PoseSE3 p;
  p.rotation.col(0) = right;
  p.rotation.col(1) = down;
  p.rotation.col(2) = forward;
  p.translation = eye;
  return p;
}

Mat4 PoseSE3::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void PoseSE3::validate(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) throw ConfigError("pose: non-finite entries");
  if ((rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) {
    throw ConfigError("pose: rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > tol) throw ConfigError("pose: rotation determinant is not +1");
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

PoseSE3 invert(const PoseSE3& p) {
  const Mat3 rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

std::vector<Vec3> apply_rigid(const PoseSE3& p, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& q : points) out.push_back(p * q);
  return out;
}

double rotation_angle(const Mat3& r) {
  // atan2 form stays accurate near zero where acos((tr - 1) / 2) loses digits.
  const Vec3 axis_sin(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis_sin.norm(), 0.5 * (r.trace() - 1.0));
}

Ray ray_from_pixel(const CameraIntrinsics& intr, const PoseSE3& pose, const PixelCoord& px,
                   double t_near, double t_far) {
  intr.validate();
  if (!(t_near >= 0.0) || !(t_near < t_far)) throw ConfigError("ray bounds must satisfy 0 <= t_near < t_far");
  const Vec3 cam((px.u - intr.cx) / intr.fx, (px.v - intr.cy) / intr.fy, 1.0);
  const Vec3 dir = pose.rotation * cam;
  const double n = dir.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("degenerate pixel ray");
  return {pose.translation, dir / n, t_near, t_far};
}

std::optional<std::pair<PixelCoord, double>> project(const CameraIntrinsics& intr,
                                                     const PoseSE3& pose, const Vec3& world) {
  const Vec3 q = pose.rotation.transpose() * (world - pose.translation);
  if (q.z() <= 0.0) return std::nullopt;
  return std::make_pair(PixelCoord{intr.fx * q.x() / q.z() + intr.cx, intr.fy * q.y() / q.z() + intr.cy},
                        q.z());
}

std::optional<std::pair<double, double>> Aabb::intersect(const Vec3& origin, const Vec3& direction) const {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (direction[a] == 0.0) {
      if (origin[a] < min[a] || origin[a] > max[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / direction[a];
    double ta = (min[a] - origin[a]) * inv;
    double tb = (max[a] - origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

std::optional<Ray> ray_in_bounds(const CameraIntrinsics& intr, const PoseSE3& pose, const PixelCoord& px,
                                 const Aabb& bounds) {
  Ray r = ray_from_pixel(intr, pose, px, 0.0, 1.0);
  const auto span = bounds.intersect(r.origin, r.direction);
  if (!span) return std::nullopt;
  r.t_near = span->first;
  r.t_far = span->second;
  return r;
}

// ---------------------------------------------------------------------------
// Camera files

namespace {

using nlohmann::json;

constexpr const char* kCameraFormat = "sylva-cameras";
constexpr int kCameraVersion = 1;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("camera file: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

CameraRig load_camera_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open camera file: " + path.string());
  try {
    const json j = json::parse(in);
    if (j.value("format", "") != kCameraFormat) throw DataError("camera file: wrong format tag");
    if (j.value("version", 0) != kCameraVersion) throw DataError("camera file: unsupported version");
    CameraRig rig;
    const json& k = j.at("intrinsics");
    rig.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                      k.at("cy").get<double>(), k.at("width").get<int>(), k.at("height").get<int>()};
    rig.intrinsics.validate();
    for (const json& f : j.at("frames")) {
      const auto& m = f.at("pose");
      if (!m.is_array() || m.size() != 16) throw DataError("camera file: pose must have 16 entries");
      Mat4 mat;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) mat(r, c) = m[4 * r + c].get<double>();
      CameraFrame frame;
      frame.pose = PoseSE3::from_matrix(mat);
      frame.image = f.value("image", "");
      frame.depth = f.value("depth", "");
      rig.frames.push_back(std::move(frame));
    }
    if (j.contains("bounds")) {
      rig.bounds = Aabb{json_vec(j["bounds"].at("min")), json_vec(j["bounds"].at("max"))};
    }
    return rig;
  } catch (const json::exception& e) {
    throw DataError("camera file " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("camera file " + path.string() + ": " + e.what());
  }
}

void save_camera_rig(const CameraRig& rig, const std::filesystem::path& path) {
  json j;
  j["format"] = kCameraFormat;
  j["version"] = kCameraVersion;
  const auto& k = rig.intrinsics;
  j["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  json frames = json::array();
  for (const auto& f : rig.frames) {
    const Mat4 m = f.pose.matrix();
    json pose = json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose.push_back(m(r, c));
    json fj{{"pose", pose}};
    if (!f.image.empty()) fj["image"] = f.image;
    if (!f.depth.empty()) fj["depth"] = f.depth;
    frames.push_back(std::move(fj));
  }
  j["frames"] = std::move(frames);
  if (rig.bounds) j["bounds"] = {{"min", vec_json(rig.bounds->min)}, {"max", vec_json(rig.bounds->max)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write camera file: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace sylva
