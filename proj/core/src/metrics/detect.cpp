// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "sylva/error.hpp"
#include "sylva/metrics.hpp"

namespace sylva {

void DetectConfig::validate() const {
  if (!(cell > 0.0)) throw ConfigError("detect: cell must be > 0");
  if (!(band_min < band_max)) throw ConfigError("detect: height band must satisfy min < max");
  if (!(merge_radius >= 0.0)) throw ConfigError("detect: merge_radius must be >= 0");
}

std::vector<TreeDetection> detect_trees_bev(const PointCloud& cloud, const DetectConfig& cfg) {
  cfg.validate();
  std::vector<Vec3> band;
  for (const Vec3& p : cloud.points) {
    if (p.z() >= cfg.band_min && p.z() <= cfg.band_max) band.push_back(p);
  }
  auto lex = [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  };
  std::sort(band.begin(), band.end(), lex);
  band.erase(std::unique(band.begin(), band.end()), band.end());

  using Key = std::pair<long long, long long>;
  std::map<Key, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < band.size(); ++i) {
    const Key k{static_cast<long long>(std::floor(band[i].x() / cfg.cell)),
                static_cast<long long>(std::floor(band[i].y() / cfg.cell))};
    cells[k].push_back(i);
  }

  std::vector<TreeDetection> found;
  std::map<Key, bool> visited;
  for (const auto& [key, _] : cells) {
    if (visited[key]) continue;
    std::vector<std::size_t> members;
    std::vector<Key> stack{key};
    visited[key] = true;
    while (!stack.empty()) {
      const Key k = stack.back();
      stack.pop_back();
      const auto& pts = cells.at(k);
      members.insert(members.end(), pts.begin(), pts.end());
      for (long long dx = -1; dx <= 1; ++dx) {
        for (long long dy = -1; dy <= 1; ++dy) {
          const Key n{k.first + dx, k.second + dy};
          if (cells.count(n) && !visited[n]) {
            visited[n] = true;
            stack.push_back(n);
          }
        }
      }
    }
    if (members.size() < cfg.min_support) continue;
    std::sort(members.begin(), members.end());
    TreeDetection d;
    d.support = members.size();
    d.bbox.min = Vec2::Constant(std::numeric_limits<double>::infinity());
    d.bbox.max = -d.bbox.min;
    Vec2 sum = Vec2::Zero();
    for (std::size_t i : members) {
      const Vec2 p = band[i].head<2>();
      sum += p;
      d.bbox.min = d.bbox.min.cwiseMin(p);
      d.bbox.max = d.bbox.max.cwiseMax(p);
    }
    d.position = sum / double(members.size());
    found.push_back(d);
  }

  std::sort(found.begin(), found.end(), [](const TreeDetection& a, const TreeDetection& b) {
    if (a.support != b.support) return a.support > b.support;
    return std::tie(a.position.x(), a.position.y()) < std::tie(b.position.x(), b.position.y());
  });
  std::vector<TreeDetection> kept;
  for (const auto& d : found) {
    auto it = std::find_if(kept.begin(), kept.end(), [&](const TreeDetection& k) {
      return (k.position - d.position).norm() < cfg.merge_radius;
    });
    if (it == kept.end()) {
      kept.push_back(d);
      continue;
    }
    it->support += d.support;
    it->bbox.min = it->bbox.min.cwiseMin(d.bbox.min);
    it->bbox.max = it->bbox.max.cwiseMax(d.bbox.max);
  }
  std::sort(kept.begin(), kept.end(), [](const TreeDetection& a, const TreeDetection& b) {
    return std::tie(a.position.x(), a.position.y()) < std::tie(b.position.x(), b.position.y());
  });
  return kept;
}

}  // namespace sylva
