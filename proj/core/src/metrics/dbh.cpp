// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <Eigen/QR>

#include "sylva/error.hpp"
#include "sylva/metrics.hpp"
#include "sylva/random.hpp"

namespace sylva {

std::string_view to_string(DbhStatus status) {
  switch (status) {
    case DbhStatus::kOk: return "ok";
    case DbhStatus::kInsufficientSliceSupport: return "insufficient slice support";
    case DbhStatus::kNoCircularStem: return "no circular stem";
  }
  return "unknown";
}

void DbhConfig::validate() const {
  if (!(slice_half_width > 0.0)) throw ConfigError("dbh: slice_half_width must be > 0");
  if (ransac_iters < 1) throw ConfigError("dbh: ransac_iters must be >= 1");
  if (!(inlier_tol > 0.0)) throw ConfigError("dbh: inlier_tol must be > 0");
  if (!(search_radius > 0.0) || !(max_radius > 0.0)) throw ConfigError("dbh: radii must be > 0");
  if (min_points < 3) throw ConfigError("dbh: min_points must be >= 3");
  if (!(min_inlier_ratio >= 0.0 && min_inlier_ratio <= 1.0)) throw ConfigError("dbh: min_inlier_ratio must lie in [0, 1]");
}

std::optional<Circle> circle_from_points(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
  if (!(std::abs(d) > 2e-9 * ab.norm() * ac.norm())) return std::nullopt;
  const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
  const Vec2 u((ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d);
  return Circle{a + u, u.norm()};
}

std::optional<Circle> fit_circle_kasa(std::span<const Vec2> points) {
  if (points.size() < 3) return std::nullopt;
  Vec2 mean = Vec2::Zero();
  for (const Vec2& p : points) mean += p;
  mean /= double(points.size());
  Eigen::MatrixXd a(points.size(), 3);
  Eigen::VectorXd b(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 q = points[i] - mean;
    a(Eigen::Index(i), 0) = 2.0 * q.x();
    a(Eigen::Index(i), 1) = 2.0 * q.y();
    a(Eigen::Index(i), 2) = 1.0;
    b[Eigen::Index(i)] = q.squaredNorm();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) return std::nullopt;
  const Eigen::Vector3d s = qr.solve(b);
  const double r2 = s[2] + s[0] * s[0] + s[1] * s[1];
  if (!(r2 > 0.0) || !std::isfinite(r2)) return std::nullopt;
  return Circle{mean + Vec2(s[0], s[1]), std::sqrt(r2)};
}

DbhResult estimate_dbh(const PointCloud& cloud, const Vec2& position, const DbhConfig& cfg) {
  cfg.validate();
  std::vector<Vec2> slice;
  const double r2 = cfg.search_radius * cfg.search_radius;
  for (const Vec3& p : cloud.points) {
    if (std::abs(p.z() - cfg.slice_center) <= cfg.slice_half_width && (p.head<2>() - position).squaredNorm() <= r2) {
      slice.push_back(p.head<2>());
    }
  }
  DbhResult out;
  if (slice.size() < cfg.min_points) {
    out.status = DbhStatus::kInsufficientSliceSupport;
    out.estimate.n_points = slice.size();
    return out;
  }

  auto inliers_of = [&](const Circle& c) {
    std::vector<Vec2> in;
    for (const Vec2& p : slice) {
      if (std::abs((p - c.center).norm() - c.radius) <= cfg.inlier_tol) in.push_back(p);
    }
    return in;
  };

  Rng rng(mix_seed(cfg.seed, 0xdb4));
  const auto n = slice.size();
  std::optional<Circle> best;
  std::size_t best_count = 0;
  for (int it = 0; it < cfg.ransac_iters; ++it) {
    const auto i = std::size_t(rng() % n);
    auto j = std::size_t(rng() % (n - 1));
    if (j >= i) ++j;
    auto k = std::size_t(rng() % (n - 2));
    if (k >= std::min(i, j)) ++k;
    if (k >= std::max(i, j)) ++k;
    const auto c = circle_from_points(slice[i], slice[j], slice[k]);
    if (!c || c->radius > cfg.max_radius) continue;
    std::size_t count = 0;
    for (const Vec2& p : slice) count += std::abs((p - c->center).norm() - c->radius) <= cfg.inlier_tol;
    if (count > best_count) {
      best_count = count;
      best = c;
    }
  }
  if (!best || double(best_count) < cfg.min_inlier_ratio * double(n)) {
    out.status = DbhStatus::kNoCircularStem;
    out.estimate.n_points = n;
    return out;
  }

  std::vector<Vec2> in = inliers_of(*best);
  std::optional<Circle> fit = fit_circle_kasa(in);
  if (fit && fit->radius <= cfg.max_radius) {
    std::vector<Vec2> refined = inliers_of(*fit);
    if (auto again = fit_circle_kasa(refined); again && refined.size() >= in.size() && again->radius <= cfg.max_radius) {
      fit = again;
      in = std::move(refined);
    }
  } else {
    fit = best;
  }
  if (double(in.size()) < cfg.min_inlier_ratio * double(n)) {
    out.status = DbhStatus::kNoCircularStem;
    out.estimate.n_points = n;
    return out;
  }
  double ss = 0.0;
  for (const Vec2& p : in) {
    const double e = (p - fit->center).norm() - fit->radius;
    ss += e * e;
  }
  out.estimate.center = fit->center;
  out.estimate.diameter = 2.0 * fit->radius;
  out.estimate.rms_residual = std::sqrt(ss / double(in.size()));
  out.estimate.n_points = in.size();
  return out;
}

}  // namespace sylva
