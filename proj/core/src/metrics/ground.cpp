// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "sylva/error.hpp"
#include "sylva/metrics.hpp"

namespace sylva {

void GroundConfig::validate() const {
  if (!(grid_cell > 0.0)) throw ConfigError("ground: grid_cell must be > 0");
  if (!(max_step > 0.0)) throw ConfigError("ground: max_step must be > 0");
  if (window < 1) throw ConfigError("ground: window must be >= 1");
}

double GroundModel::height_at(double x, double y) const {
  const double fx = std::clamp((x - origin.x()) / cell - 0.5, 0.0, double(nx - 1));
  const double fy = std::clamp((y - origin.y()) / cell - 0.5, 0.0, double(ny - 1));
  const int i0 = std::min(int(fx), std::max(nx - 2, 0)), j0 = std::min(int(fy), std::max(ny - 2, 0));
  const int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny - 1);
  const double ax = fx - i0, ay = fy - j0;
  auto h = [&](int i, int j) { return heights[std::size_t(j) * nx + i]; };
  return (1 - ay) * ((1 - ax) * h(i0, j0) + ax * h(i1, j0)) + ay * ((1 - ax) * h(i0, j1) + ax * h(i1, j1));
}

GroundModel fit_ground(const PointCloud& cloud, const GroundConfig& cfg) {
  cfg.validate();
  if (cloud.empty()) throw DataError("no ground points");
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (const Vec3& p : cloud.points) {
    if (!p.allFinite()) throw DataError("ground: non-finite point");
    lo = lo.cwiseMin(p.head<2>());
    hi = hi.cwiseMax(p.head<2>());
  }
  GroundModel g;
  g.cell = cfg.grid_cell;
  g.origin = lo;
  g.nx = std::max(1, int(std::floor((hi.x() - lo.x()) / g.cell)) + 1);
  g.ny = std::max(1, int(std::floor((hi.y() - lo.y()) / g.cell)) + 1);
  const std::size_t ncell = std::size_t(g.nx) * std::size_t(g.ny);
  if (ncell > 50'000'000) throw ConfigError("ground: grid too large; increase grid_cell");

  // Lowest point per cell.
  std::vector<Vec3> lowest(ncell, Vec3::Constant(std::numeric_limits<double>::quiet_NaN()));
  std::vector<char> valid(ncell, 0);
  for (const Vec3& p : cloud.points) {
    const int i = std::min(g.nx - 1, int((p.x() - lo.x()) / g.cell));
    const int j = std::min(g.ny - 1, int((p.y() - lo.y()) / g.cell));
    const std::size_t c = std::size_t(j) * g.nx + i;
    if (!valid[c] || p.z() < lowest[c].z() ||
        (p.z() == lowest[c].z() && std::tie(p.x(), p.y()) < std::tie(lowest[c].x(), lowest[c].y()))) {
      lowest[c] = p;
      valid[c] = 1;
    }
  }

  // Reject cells that sit well above their neighborhood (canopy-only cells).
  std::vector<char> ground = valid;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t c = std::size_t(j) * g.nx + i;
      if (!valid[c]) continue;
      double m = lowest[c].z();
      for (int dj = -cfg.window; dj <= cfg.window; ++dj) {
        for (int di = -cfg.window; di <= cfg.window; ++di) {
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= g.nx || b >= g.ny) continue;
          const std::size_t n = std::size_t(b) * g.nx + a;
          if (valid[n]) m = std::min(m, lowest[n].z());
        }
      }
      if (lowest[c].z() > m + cfg.max_step) ground[c] = 0;
    }
  }

  // Local plane through the ground minima of the 3x3 neighborhood, evaluated
  // at the cell center; exact on planar terrain.
  g.heights.assign(ncell, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> known(ncell, 0);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t c = std::size_t(j) * g.nx + i;
      if (!ground[c]) continue;
      const Vec2 center = lo + g.cell * Vec2(i + 0.5, j + 0.5);
      Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
      Eigen::Vector3d atb = Eigen::Vector3d::Zero();
      int count = 0;
      double zsum = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= g.nx || b >= g.ny) continue;
          const std::size_t n = std::size_t(b) * g.nx + a;
          if (!ground[n]) continue;
          const Eigen::Vector3d row(1.0, (lowest[n].x() - center.x()) / g.cell, (lowest[n].y() - center.y()) / g.cell);
          ata += row * row.transpose();
          atb += row * lowest[n].z();
          zsum += lowest[n].z();
          ++count;
        }
      }
      double h = lowest[c].z();
      if (count >= 3) {
        Eigen::LDLT<Eigen::Matrix3d> ldlt(ata);
        const Eigen::Vector3d s = ldlt.solve(atb);
        h = (ldlt.info() == Eigen::Success && s.allFinite() && ldlt.rcond() > 1e-9) ? s[0] : zsum / count;
      }
      g.heights[c] = h;
      known[c] = 1;
    }
  }
  if (std::none_of(known.begin(), known.end(), [](char k) { return k != 0; })) throw DataError("no ground points");

  // Fill holes from filled neighbors, one ring per pass.
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<char> next = known;
    std::vector<double> h = g.heights;
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const std::size_t c = std::size_t(j) * g.nx + i;
        if (known[c]) continue;
        double sum = 0.0;
        int count = 0;
        for (int dj = -1; dj <= 1; ++dj) {
          for (int di = -1; di <= 1; ++di) {
            const int a = i + di, b = j + dj;
            if (a < 0 || b < 0 || a >= g.nx || b >= g.ny) continue;
            const std::size_t n = std::size_t(b) * g.nx + a;
            if (known[n]) {
              sum += g.heights[n];
              ++count;
            }
          }
        }
        if (count > 0) {
          h[c] = sum / count;
          next[c] = 1;
          changed = true;
        }
      }
    }
    known.swap(next);
    g.heights.swap(h);
  }
  return g;
}

PointCloud ground_normalize(const PointCloud& cloud, const GroundConfig& cfg) {
  const GroundModel g = fit_ground(cloud, cfg);
  PointCloud out = cloud;
  for (Vec3& p : out.points) p.z() -= g.height_at(p.x(), p.y());
  return out;
}

}  // namespace sylva
