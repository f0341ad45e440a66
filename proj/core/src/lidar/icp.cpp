// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sylva/error.hpp"
#include "sylva/lidar.hpp"

namespace sylva {

namespace {
constexpr double kMaxCells = 3.2e7;
}

SpatialGrid::SpatialGrid(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()), cell_(cell_size) {
  if (!(cell_ > 0.0)) throw ConfigError("spatial grid: cell size must be positive");
  Vec3 lo = Vec3::Constant(0.0), hi = Vec3::Constant(0.0);
  if (!points_.empty()) {
    lo = hi = points_.front();
    for (const auto& p : points_) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  const Vec3 extent = hi - lo;
  // Coarsen the grid if it would not fit in memory; queries stay exact.
  const double volume_cells = ((extent / cell_).array() + 1.0).prod();
  if (volume_cells > kMaxCells) cell_ *= std::cbrt(volume_cells / kMaxCells) * 1.01;
  origin_ = lo;
  for (int a = 0; a < 3; ++a) dims_[a] = int(std::floor(extent[a] / cell_)) + 1;
  const std::size_t n_cells = std::size_t(dims_.x()) * dims_.y() * dims_.z();
  cell_start_.assign(n_cells + 1, 0);
  std::vector<std::uint32_t> cell_of(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Eigen::Vector3i c = ((points_[i] - origin_) / cell_).array().floor().cast<int>().cwiseMin(dims_.array() - 1);
    cell_of[i] = std::uint32_t((std::size_t(c.z()) * dims_.y() + c.y()) * dims_.x() + c.x());
    ++cell_start_[cell_of[i] + 1];
  }
  std::partial_sum(cell_start_.begin(), cell_start_.end(), cell_start_.begin());
  order_.resize(points_.size());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < points_.size(); ++i) order_[fill[cell_of[i]]++] = std::uint32_t(i);
}

std::optional<SpatialGrid::Hit> SpatialGrid::nearest(const Vec3& query, double max_distance,
                                                     std::optional<std::size_t> exclude) const {
  if (points_.empty()) return std::nullopt;
  const Vec3 rel = (query - origin_) / cell_;
  const Eigen::Vector3i c(int(std::floor(rel.x())), int(std::floor(rel.y())), int(std::floor(rel.z())));
  std::optional<Hit> best;
  double best_d2 = max_distance * max_distance;
  const int max_r = int(std::ceil(max_distance / cell_)) + 1;
  auto visit = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= dims_.x() || y >= dims_.y() || z >= dims_.z()) return;
    const std::size_t cell = (std::size_t(z) * dims_.y() + y) * dims_.x() + x;
    for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
      const std::uint32_t i = order_[k];
      if (exclude && i == *exclude) continue;
      const double d2 = (points_[i] - query).squaredNorm();
      if (d2 <= best_d2 && (!best || d2 < best->distance_sq || (d2 == best->distance_sq && i < best->index))) {
        best = Hit{i, d2};
        best_d2 = d2;
      }
    }
  };
  for (int r = 0; r <= max_r; ++r) {
    for (int dx = -r; dx <= r; ++dx) {
      for (int dy = -r; dy <= r; ++dy) {
        const bool edge = std::abs(dx) == r || std::abs(dy) == r;
        if (edge) {
          for (int dz = -r; dz <= r; ++dz) visit(c.x() + dx, c.y() + dy, c.z() + dz);
        } else {
          visit(c.x() + dx, c.y() + dy, c.z() - r);
          if (r > 0) visit(c.x() + dx, c.y() + dy, c.z() + r);
        }
      }
    }
    // Anything in shell r + 1 is at least r cells away.
    const double reach = r * cell_;
    if (best && best->distance_sq <= reach * reach) break;
    if (reach > max_distance) break;
  }
  return best;
}

double median_spacing(std::span<const Vec3> points, std::size_t max_samples) {
  if (points.size() < 2) throw DataError("median_spacing: need at least two points");
  Vec3 lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // Surface-like data: guess the spacing from the two largest box extents.
  Vec3 e = (hi - lo).cwiseMax(1e-6);
  std::sort(e.data(), e.data() + 3);
  const double guess = std::max(1e-6, std::sqrt(e[1] * e[2] / double(points.size())));
  const SpatialGrid grid(points, guess);
  const std::size_t stride = std::max<std::size_t>(1, points.size() / max_samples);
  const double far = 2.0 * (hi - lo).norm() + 1.0;
  std::vector<double> d;
  for (std::size_t i = 0; i < points.size(); i += stride) {
    const auto hit = grid.nearest(points[i], far, i);
    if (hit) d.push_back(std::sqrt(hit->distance_sq));
  }
  if (d.empty()) throw DataError("median_spacing: could not find neighbours");
  std::nth_element(d.begin(), d.begin() + std::ptrdiff_t(d.size() / 2), d.end());
  return d[d.size() / 2];
}

namespace {

/// x -> R x + t scaled toward the identity by alpha in (0, 1].
PoseSE3 scale_step(const PoseSE3& step, double alpha) {
  if (alpha == 1.0) return step;
  const Eigen::AngleAxisd aa(step.rotation);
  return {Eigen::AngleAxisd(alpha * aa.angle(), aa.axis()).toRotationMatrix(), alpha * step.translation};
}

/// Unit normal of the least-squares plane through the neighbors, or empty.
std::optional<Vec3> plane_normal(const SpatialGrid& grid, const Vec3& q, double radius, std::vector<std::size_t>& scratch) {
  grid.within(q, radius, scratch);
  if (scratch.size() < 5) return std::nullopt;
  Vec3 mean = Vec3::Zero();
  for (std::size_t i : scratch) mean += grid.point(i);
  mean /= double(scratch.size());
  Mat3 cov = Mat3::Zero();
  for (std::size_t i : scratch) {
    const Vec3 d = grid.point(i) - mean;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  const Vec3 ev = eig.eigenvalues();
  // Needs a two-dimensional spread; a line of points has no defined normal.
  if (!(ev[1] > 1e-12 * ev[2])) return std::nullopt;
  return eig.eigenvectors().col(0).normalized();
}

}  // namespace

void SpatialGrid::within(const Vec3& query, double radius, std::vector<std::size_t>& out) const {
  out.clear();
  if (points_.empty()) return;
  const double r2 = radius * radius;
  const Eigen::Vector3i lo = ((query.array() - radius - origin_.array()) / cell_).floor().cast<int>().cwiseMax(0);
  const Eigen::Vector3i hi =
      ((query.array() + radius - origin_.array()) / cell_).floor().cast<int>().cwiseMin(dims_.array() - 1);
  for (int z = lo.z(); z <= hi.z(); ++z) {
    for (int y = lo.y(); y <= hi.y(); ++y) {
      for (int x = lo.x(); x <= hi.x(); ++x) {
        const std::size_t cell = (std::size_t(z) * dims_.y() + y) * dims_.x() + x;
        for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
          if ((points_[order_[k]] - query).squaredNorm() <= r2) out.push_back(order_[k]);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
}

RegistrationResult coregister_icp(const PointCloud& source, const PointCloud& target, const PoseSE3& init,
                                  const IcpConfig& cfg) {
  if (source.empty() || target.empty()) throw DataError("coregister_icp: both clouds must be nonempty");
  if (cfg.trim_fraction < 0.0 || cfg.trim_fraction >= 1.0) throw ConfigError("coregister_icp: trim fraction in [0, 1)");
  if (!(cfg.max_correspondence > 0.0)) throw ConfigError("coregister_icp: max_correspondence must be positive");
  if (cfg.max_iter < 0) throw ConfigError("coregister_icp: max_iter must be >= 0");
  init.validate(1e-6);
  const bool to_plane = cfg.metric == IcpMetric::kPointToPlane;
  const double spacing =
      (!cfg.cell_size || (to_plane && !cfg.normal_radius)) ? median_spacing(target.points) : 0.0;
  const double cell = cfg.cell_size.value_or(2.0 * spacing);
  const double normal_radius = cfg.normal_radius.value_or(4.0 * spacing);
  const SpatialGrid grid(target.points, cell);

  const std::size_t n = source.size();
  const std::size_t keep = std::max<std::size_t>(1, std::size_t(std::ceil((1.0 - cfg.trim_fraction) * double(n))));
  const double tau2 = cfg.max_correspondence * cfg.max_correspondence;

  // Target normals, estimated on first use.
  std::vector<Vec3> normals;
  std::vector<signed char> normal_state;  // 0 unknown, 1 valid, -1 undefined
  std::vector<std::size_t> scratch;
  if (to_plane) {
    normals.assign(target.size(), Vec3::Zero());
    normal_state.assign(target.size(), 0);
  }
  auto normal_of = [&](std::size_t j) -> const Vec3* {
    if (normal_state[j] == 0) {
      const auto nrm = plane_normal(grid, target.points[j], normal_radius, scratch);
      normal_state[j] = nrm ? 1 : -1;
      if (nrm) normals[j] = *nrm;
    }
    return normal_state[j] > 0 ? &normals[j] : nullptr;
  };

  RegistrationResult res;
  res.transform = init;
  std::vector<double> cost(n);
  std::vector<std::int64_t> match(n);
  std::vector<std::size_t> idx(n);

  // Matches every source point, trims to `keep`, returns the truncated RMS.
  auto correspond = [&](const PoseSE3& pose) {
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 p = pose * source.points[i];
      const auto hit = grid.nearest(p, cfg.max_correspondence);
      match[i] = -1;
      cost[i] = tau2;
      if (!hit) continue;
      if (to_plane) {
        const Vec3* nrm = normal_of(hit->index);
        if (!nrm) continue;
        const double d = (p - target.points[hit->index]).dot(*nrm);
        cost[i] = std::min(d * d, tau2);
      } else {
        cost[i] = hit->distance_sq;
      }
      match[i] = std::int64_t(hit->index);
    }
    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + std::ptrdiff_t(keep - 1), idx.end(), [&](std::size_t a, std::size_t b) {
      return cost[a] < cost[b] || (cost[a] == cost[b] && a < b);
    });
    double sum = 0.0;
    for (std::size_t k = 0; k < keep; ++k) sum += cost[idx[k]];
    return std::sqrt(sum / double(keep));
  };

  // Kabsch on the kept pairs.
  auto point_step = [&]() -> PoseSE3 {
    Vec3 mp = Vec3::Zero(), mq = Vec3::Zero();
    std::size_t m = 0;
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t i = idx[k];
      if (match[i] < 0) continue;
      mp += res.transform * source.points[i];
      mq += target.points[std::size_t(match[i])];
      ++m;
    }
    if (m < 3) throw NumericalError("unconstrained registration");
    mp /= double(m);
    mq /= double(m);
    Mat3 h = Mat3::Zero();
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t i = idx[k];
      if (match[i] < 0) continue;
      h += (res.transform * source.points[i] - mp) * (target.points[std::size_t(match[i])] - mq).transpose();
    }
    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    // A rank-one cross covariance (collinear matches) leaves a free rotation.
    if (!(sv[0] > 0.0) || sv[1] < 1e-9 * sv[0]) throw NumericalError("unconstrained registration");
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
    return {r, mq - r * mp};
  };

  // One Gauss-Newton step on the linearized point-to-plane residuals,
  // rotating about the centroid of the kept source points.
  auto plane_step = [&]() -> PoseSE3 {
    Vec3 c = Vec3::Zero();
    std::size_t m = 0;
    for (std::size_t k = 0; k < keep; ++k) {
      if (match[idx[k]] < 0) continue;
      c += res.transform * source.points[idx[k]];
      ++m;
    }
    if (m < 6) throw NumericalError("unconstrained registration");
    c /= double(m);
    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t i = idx[k];
      if (match[i] < 0) continue;
      const auto j = std::size_t(match[i]);
      const Vec3& nrm = normals[j];
      const Vec3 p = res.transform * source.points[i];
      Eigen::Matrix<double, 6, 1> row;
      row << (p - c).cross(nrm), nrm;
      a += row * row.transpose();
      b -= row * (p - target.points[j]).dot(nrm);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(a);
    const auto ev = eig.eigenvalues();
    if (!(ev[5] > 0.0) || ev[0] < 1e-9 * ev[5]) throw NumericalError("unconstrained registration");
    const Eigen::Matrix<double, 6, 1> x = eig.eigenvectors() * (eig.eigenvectors().transpose() * b).cwiseQuotient(ev);
    const Vec3 w = x.head<3>();
    const Mat3 r = w.norm() > 0.0 ? Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix() : Mat3::Identity();
    return {r, c + x.tail<3>() - r * c};
  };

  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : source.points) centroid += p;
  centroid /= double(n);

  double f = correspond(res.transform);
  for (int it = 0; it < cfg.max_iter; ++it) {
    res.residual_history.push_back(f);
    const PoseSE3 step = to_plane ? plane_step() : point_step();
    // Backtrack until the re-matched objective does not increase.
    std::optional<PoseSE3> accepted;
    const Vec3 before = res.transform * centroid;
    double f_new = f;
    for (double alpha = 1.0; alpha > 1e-3; alpha *= 0.5) {
      const PoseSE3 s = scale_step(step, alpha);
      const PoseSE3 cand = compose(s, res.transform);
      f_new = correspond(cand);
      if (f_new <= f) {
        accepted = s;
        res.transform = cand;
        break;
      }
    }
    res.iterations = it + 1;
    if (!accepted) {
      f = correspond(res.transform);
      res.converged = true;
      break;
    }
    f = f_new;
    const Vec3 motion = res.transform * centroid - before;
    if (motion.norm() < cfg.tol && rotation_angle(accepted->rotation) < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.rms_residual = f;
  res.residual_history.push_back(f);
  return res;
}

RegistrationResult coregister_staged(const PointCloud& source, const PointCloud& target, const PoseSE3& init,
                                     const IcpConfig& cfg, std::span<const double> gates) {
  if (gates.empty()) throw ConfigError("coregister_staged: need at least one gate");
  RegistrationResult res;
  res.transform = init;
  int iterations = 0;
  IcpConfig stage = cfg;
  // Share one cell size so every stage sees the same grid.
  if (!stage.cell_size) stage.cell_size = 2.0 * median_spacing(target.points);
  for (double gate : gates) {
    stage.max_correspondence = gate;
    res = coregister_icp(source, target, res.transform, stage);
    iterations += res.iterations;
  }
  res.iterations = iterations;
  return res;
}

}  // namespace sylva
