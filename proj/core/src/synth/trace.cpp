// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "sylva/synth.hpp"

namespace sylva {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Roots of a t^2 + 2 hb t + c = 0 in ascending order; false when none are real.
bool solve_quadratic(double a, double hb, double c, double& t0, double& t1) {
  const double disc = hb * hb - a * c;
  if (disc < 0.0 || a == 0.0) return false;
  const double q = -(hb + std::copysign(std::sqrt(disc), hb));
  if (q == 0.0) {
    t0 = t1 = 0.0;
    return true;
  }
  t0 = q / a;
  t1 = c / q;
  if (t0 > t1) std::swap(t0, t1);
  return true;
}

double first_in(double t0, double t1, double lo, double hi) {
  if (t0 >= lo && t0 <= hi) return t0;
  if (t1 >= lo && t1 <= hi) return t1;
  return kInf;
}

double hit_ellipsoid(const Ellipsoid& e, const Ray& ray, double hi) {
  const Vec3 o = (ray.origin - e.center).cwiseQuotient(e.semi_axes);
  const Vec3 d = ray.direction.cwiseQuotient(e.semi_axes);
  double t0, t1;
  if (!solve_quadratic(d.squaredNorm(), o.dot(d), o.squaredNorm() - 1.0, t0, t1)) return kInf;
  return first_in(t0, t1, ray.t_near, hi);
}

double hit_cylinder(const Cylinder& cyl, const Ray& ray, double hi) {
  const double ox = ray.origin.x() - cyl.base.x(), oy = ray.origin.y() - cyl.base.y();
  const double dx = ray.direction.x(), dy = ray.direction.y(), dz = ray.direction.z();
  const double z0 = cyl.base.z(), z1 = cyl.base.z() + cyl.height;
  const double r2 = cyl.radius * cyl.radius;
  double best = kInf;
  double t0, t1;
  if (solve_quadratic(dx * dx + dy * dy, ox * dx + oy * dy, ox * ox + oy * oy - r2, t0, t1)) {
    for (double t : {t0, t1}) {
      if (t < ray.t_near || t > hi || t >= best) continue;
      const double z = ray.origin.z() + t * dz;
      if (z >= z0 && z <= z1) best = t;
    }
  }
  if (dz != 0.0) {
    for (double zc : {z0, z1}) {
      const double t = (zc - ray.origin.z()) / dz;
      if (t < ray.t_near || t > hi || t >= best) continue;
      const double x = ox + t * dx, y = oy + t * dy;
      if (x * x + y * y <= r2) best = t;
    }
  }
  return best;
}

double hit_ground(const GroundPlane& g, const Ray& ray, double hi) {
  const double denom = ray.direction.z() - g.slope.x() * ray.direction.x() - g.slope.y() * ray.direction.y();
  if (denom == 0.0) return kInf;
  const double t = (g.height_at(ray.origin.x(), ray.origin.y()) - ray.origin.z()) / denom;
  return (t >= ray.t_near && t <= hi) ? t : kInf;
}

double ellipsoid_residual(const Ellipsoid& e, const Vec3& p) {
  const Vec3 q = (p - e.center).cwiseQuotient(e.semi_axes);
  const Vec3 grad = 2.0 * q.cwiseQuotient(e.semi_axes);
  const double n = grad.norm();
  const double f = q.squaredNorm() - 1.0;
  return n > 0.0 ? std::abs(f) / n : std::abs(f);
}

double cylinder_residual(const Cylinder& c, const Vec3& p) {
  const double rho = (p.head<2>() - c.base.head<2>()).norm();
  const double z0 = c.base.z(), z1 = c.base.z() + c.height;
  const double dr = rho - c.radius;
  const double dz = p.z() < z0 ? z0 - p.z() : (p.z() > z1 ? p.z() - z1 : 0.0);
  if (dr <= 0.0 && dz == 0.0) return std::min({-dr, p.z() - z0, z1 - p.z()});
  return std::hypot(std::max(dr, 0.0), dz);
}

bool inside_ellipsoid(const Ellipsoid& e, const Vec3& p) {
  return (p - e.center).cwiseQuotient(e.semi_axes).squaredNorm() < 1.0;
}

}  // namespace

std::optional<SurfaceHit> trace_ray_exact(const SceneDescription& scene, const Ray& ray, const TraceOptions& opts) {
  double best = ray.t_far;
  PrimitiveRef ref;
  bool found = false;
  auto consider = [&](double t, PrimitiveKind kind, int index) {
    if (t <= best && t < kInf) {
      best = t;
      ref = {kind, index};
      found = true;
    }
  };
  consider(hit_ground(scene.ground, ray, best), PrimitiveKind::kGround, 0);
  for (int i = 0; i < int(scene.trees.size()); ++i) {
    const auto& tree = scene.trees[std::size_t(i)];
    consider(hit_cylinder(tree.trunk, ray, best), PrimitiveKind::kTrunk, i);
    if (!opts.skip_canopies) consider(hit_ellipsoid(tree.canopy, ray, best), PrimitiveKind::kCanopy, i);
  }
  for (int i = 0; i < int(scene.mounds.size()); ++i) {
    consider(hit_ellipsoid(scene.mounds[std::size_t(i)].shape, ray, best), PrimitiveKind::kMound, i);
  }
  if (!found) return std::nullopt;

  SurfaceHit hit;
  hit.distance = best;
  hit.primitive = ref;
  switch (ref.kind) {
    case PrimitiveKind::kGround: {
      const Vec3 p = ray.at(best);
      hit.color = scene.ground.color_at(p.x(), p.y());
      break;
    }
    case PrimitiveKind::kTrunk: hit.color = scene.trees[std::size_t(ref.index)].trunk_color; break;
    case PrimitiveKind::kCanopy: hit.color = scene.trees[std::size_t(ref.index)].canopy_color; break;
    case PrimitiveKind::kMound: hit.color = scene.mounds[std::size_t(ref.index)].color; break;
  }
  return hit;
}

double surface_residual(const SceneDescription& scene, const PrimitiveRef& ref, const Vec3& p) {
  const auto idx = std::size_t(ref.index);
  switch (ref.kind) {
    case PrimitiveKind::kGround: {
      const auto& g = scene.ground;
      return std::abs(p.z() - g.height_at(p.x(), p.y())) / std::sqrt(1.0 + g.slope.squaredNorm());
    }
    case PrimitiveKind::kTrunk: return cylinder_residual(scene.trees.at(idx).trunk, p);
    case PrimitiveKind::kCanopy: return ellipsoid_residual(scene.trees.at(idx).canopy, p);
    case PrimitiveKind::kMound: return ellipsoid_residual(scene.mounds.at(idx).shape, p);
  }
  return kInf;
}

bool inside_solid(const SceneDescription& scene, const Vec3& p) {
  if (p.z() < scene.ground.height_at(p.x(), p.y())) return true;
  for (const auto& t : scene.trees) {
    const auto& c = t.trunk;
    if ((p.head<2>() - c.base.head<2>()).norm() < c.radius && p.z() > c.base.z() && p.z() < c.base.z() + c.height) {
      return true;
    }
    if (inside_ellipsoid(t.canopy, p)) return true;
  }
  return std::any_of(scene.mounds.begin(), scene.mounds.end(),
                     [&](const Mound& m) { return inside_ellipsoid(m.shape, p); });
}

}  // namespace sylva
