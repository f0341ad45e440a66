// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sylva/error.hpp"
#include "sylva/parallel.hpp"
#include "sylva/random.hpp"
#include "sylva/synth.hpp"

namespace sylva {
namespace {

constexpr double kDeg = 0.017453292519943295;

Rgb8 to_rgb8(const Vec3& c) {
  auto q = [](double v) { return std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  return {q(c.x()), q(c.y()), q(c.z())};
}

}  // namespace

std::vector<SyntheticView> render_views(const SceneDescription& scene, std::span<const Camera> cameras, int threads) {
  std::vector<SyntheticView> views;
  views.reserve(cameras.size());
  for (const auto& cam : cameras) {
    cam.intrinsics.validate();
    cam.pose.validate();
    const int w = cam.intrinsics.width, h = cam.intrinsics.height;
    SyntheticView view{Image(w, h, scene.sky_color), Raster(w, h, std::numeric_limits<double>::infinity())};
    parallel_for(std::size_t(h), threads, [&](std::size_t row) {
      const int y = int(row);
      for (int x = 0; x < w; ++x) {
        const Ray ray = ray_from_pixel(cam.intrinsics, cam.pose, PixelCoord::center_of(x, y), 0.0,
                                       std::numeric_limits<double>::infinity());
        if (auto hit = trace_ray_exact(scene, ray)) {
          view.color.at(x, y) = hit->color;
          view.depth.at(x, y) = hit->distance;
        }
      }
    });
    views.push_back(std::move(view));
  }
  return views;
}

ScanResult simulate_als(const SceneDescription& scene, const AlsConfig& cfg) {
  if (!(cfg.density > 0.0) || !std::isfinite(cfg.density)) throw ConfigError("ALS density must be > 0");
  if (!(cfg.porosity >= 0.0 && cfg.porosity <= 1.0)) throw ConfigError("ALS porosity must lie in [0, 1]");
  if (!(cfg.range_noise >= 0.0)) throw ConfigError("ALS range noise must be >= 0");
  if (!(cfg.altitude > scene.extent.max.z())) throw ConfigError("ALS altitude must be above the scene");
  const Rect2 region = cfg.region.value_or(Rect2{scene.extent.min.head<2>(), scene.extent.max.head<2>()});
  if (!(region.area() > 0.0)) throw ConfigError("ALS region has zero area");

  Rng rng(mix_seed(cfg.seed, 0xa15));
  const std::uint64_t n = poisson(rng, cfg.density * region.area());
  ScanResult out;
  out.cloud.source = SourceTag::kALS;
  out.rays_cast = n;
  out.cloud.points.reserve(n);
  out.cloud.colors.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Ray ray;
    const double x = uniform(rng, region.min.x(), region.max.x());
    const double y = uniform(rng, region.min.y(), region.max.y());
    ray.origin = Vec3(x, y, cfg.altitude);
    ray.direction = -Vec3::UnitZ();
    TraceOptions topts;
    topts.skip_canopies = cfg.porosity > 0.0 && uniform01(rng) < cfg.porosity;
    const double noise = cfg.range_noise > 0.0 ? cfg.range_noise * normal01(rng) : 0.0;
    auto hit = trace_ray_exact(scene, ray, topts);
    if (!hit) continue;
    out.cloud.points.push_back(ray.at(hit->distance + noise));
    out.cloud.colors.push_back(to_rgb8(hit->color));
    out.hits.push_back(hit->primitive);
  }
  out.cloud.tags.assign(out.cloud.points.size(), SourceTag::kALS);
  return out;
}

ScanResult simulate_tls(const SceneDescription& scene, const TlsConfig& cfg, int threads) {
  if (!(cfg.angular_res_deg > 0.0 && cfg.angular_res_deg <= 90.0)) {
    throw ConfigError("TLS angular resolution must lie in (0, 90] degrees");
  }
  if (!(cfg.max_range > 0.0)) throw ConfigError("TLS max range must be > 0");
  if (!(cfg.range_noise >= 0.0)) throw ConfigError("TLS range noise must be >= 0");
  if (!(cfg.min_elevation_deg >= -90.0 && cfg.max_elevation_deg <= 90.0 &&
        cfg.min_elevation_deg < cfg.max_elevation_deg)) {
    throw ConfigError("TLS elevation range must satisfy -90 <= min < max <= 90");
  }
  if (!cfg.origin.allFinite() || inside_solid(scene, cfg.origin)) {
    throw ConfigError("TLS origin inside a solid or below ground");
  }

  const auto n_az = std::size_t(std::max(1L, std::lround(360.0 / cfg.angular_res_deg)));
  const double span = cfg.max_elevation_deg - cfg.min_elevation_deg;
  const auto n_el = std::size_t(std::max(1L, std::lround(span / cfg.angular_res_deg)));
  const double az_step = 360.0 / double(n_az), el_step = span / double(n_el);
  Rng rng(mix_seed(cfg.seed, 0x715));
  const double az0 = uniform01(rng) * az_step;

  struct Row {
    std::vector<Vec3> points;
    std::vector<Rgb8> colors;
    std::vector<PrimitiveRef> hits;
  };
  std::vector<Row> rows(n_el);
  parallel_for(n_el, threads, [&](std::size_t j) {
    const double el = (cfg.min_elevation_deg + (double(j) + 0.5) * el_step) * kDeg;
    Row& row = rows[j];
    for (std::size_t i = 0; i < n_az; ++i) {
      const double az = (az0 + double(i) * az_step) * kDeg;
      Ray ray;
      ray.origin = cfg.origin;
      ray.direction = Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      ray.t_far = cfg.max_range;
      auto hit = trace_ray_exact(scene, ray);
      if (!hit) continue;
      double t = hit->distance;
      if (cfg.range_noise > 0.0) {
        Rng ray_rng(mix_seed(cfg.seed, 0x715, j * n_az + i));
        t += cfg.range_noise * normal01(ray_rng);
      }
      row.points.push_back(ray.at(t));
      row.colors.push_back(to_rgb8(hit->color));
      row.hits.push_back(hit->primitive);
    }
  });

  ScanResult out;
  out.rays_cast = n_az * n_el;
  out.cloud.source = SourceTag::kTLS;
  for (auto& row : rows) {
    out.cloud.points.insert(out.cloud.points.end(), row.points.begin(), row.points.end());
    out.cloud.colors.insert(out.cloud.colors.end(), row.colors.begin(), row.colors.end());
    out.hits.insert(out.hits.end(), row.hits.begin(), row.hits.end());
  }
  out.cloud.tags.assign(out.cloud.points.size(), SourceTag::kTLS);
  return out;
}

std::vector<Camera> aerial_rig(const Rect2& footprint, double altitude, int nx, int ny,
                               const CameraIntrinsics& intrinsics, double look_ahead) {
  if (nx < 1 || ny < 1) throw ConfigError("aerial rig grid must be at least 1 x 1");
  intrinsics.validate();
  const Vec2 center = 0.5 * (footprint.min + footprint.max);
  std::vector<Camera> cams;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Vec2 xy(footprint.min.x() + (i + 0.5) * (footprint.max.x() - footprint.min.x()) / nx,
                    footprint.min.y() + (j + 0.5) * (footprint.max.y() - footprint.min.y()) / ny);
      const Vec2 aim = xy + look_ahead * (center - xy);
      const Vec3 eye(xy.x(), xy.y(), altitude);
      cams.push_back({intrinsics, PoseSE3::look_at(eye, Vec3(aim.x(), aim.y(), 0.0))});
    }
  }
  return cams;
}

std::vector<Camera> orbit_rig(const Vec3& target, double radius, double height, int count,
                              const CameraIntrinsics& intrinsics, double phase_deg) {
  if (count < 1) throw ConfigError("orbit rig needs at least one camera");
  if (!(radius > 0.0)) throw ConfigError("orbit radius must be > 0");
  intrinsics.validate();
  std::vector<Camera> cams;
  for (int k = 0; k < count; ++k) {
    const double a = (phase_deg + 360.0 * k / count) * kDeg;
    const Vec3 eye = target + Vec3(radius * std::cos(a), radius * std::sin(a), height);
    cams.push_back({intrinsics, PoseSE3::look_at(eye, target)});
  }
  return cams;
}

}  // namespace sylva
