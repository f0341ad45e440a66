// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "sylva/error.hpp"
#include "sylva/lidar.hpp"
#include "sylva/random.hpp"

namespace sylva {

std::string_view to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::kALS: return "ALS";
    case SourceTag::kTLS: return "TLS";
    case SourceTag::kNERF: return "NERF";
    case SourceTag::kSYNTH: return "SYNTH";
    case SourceTag::kMixed: return "MIXED";
  }
  return "UNKNOWN";
}

SourceTag source_tag_from_string(std::string_view name) {
  for (SourceTag t : {SourceTag::kALS, SourceTag::kTLS, SourceTag::kNERF, SourceTag::kSYNTH, SourceTag::kMixed}) {
    if (to_string(t) == name) return t;
  }
  throw DataError("unknown source tag '" + std::string(name) + "'");
}

void PointCloud::validate() const {
  if (!colors.empty() && colors.size() != points.size()) throw DataError("point cloud: color count mismatch");
  if (!tags.empty() && tags.size() != points.size()) throw DataError("point cloud: tag count mismatch");
  for (const auto& p : points) {
    if (!p.allFinite()) throw DataError("point cloud: non-finite coordinate");
  }
}

double cloud_density(const PointCloud& cloud, const Rect2& region) {
  const double area = region.area();
  if (!(area > 0.0)) throw ConfigError("cloud_density: region has no area");
  std::size_t count = 0;
  for (const auto& p : cloud.points) count += region.contains(p.head<2>()) ? 1 : 0;
  return double(count) / area;
}

PointCloud merge(std::span<const PointCloud> clouds) {
  PointCloud out;
  if (clouds.empty()) return out;
  out.frame = clouds.front().frame;
  bool any_color = false;
  for (const auto& c : clouds) {
    if (c.frame != out.frame) {
      throw DataError("merge: frame mismatch ('" + c.frame + "' vs '" + out.frame + "'); register first");
    }
    any_color = any_color || !c.colors.empty();
  }
  for (const auto& c : clouds) {
    out.points.insert(out.points.end(), c.points.begin(), c.points.end());
    if (any_color) {
      if (c.colors.empty()) {
        out.colors.insert(out.colors.end(), c.size(), Rgb8{});
      } else {
        out.colors.insert(out.colors.end(), c.colors.begin(), c.colors.end());
      }
    }
    for (std::size_t i = 0; i < c.size(); ++i) out.tags.push_back(c.tag(i));
  }
  const bool uniform = std::all_of(out.tags.begin(), out.tags.end(), [&](SourceTag t) { return t == out.tags.front(); });
  if (uniform) {
    out.source = out.tags.empty() ? clouds.front().source : out.tags.front();
    out.tags.clear();
  } else {
    out.source = SourceTag::kMixed;
  }
  return out;
}

PointCloud filter_by_source(const PointCloud& cloud, SourceTag tag) {
  PointCloud out;
  out.source = tag;
  out.frame = cloud.frame;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.tag(i) != tag) continue;
    out.points.push_back(cloud.points[i]);
    if (!cloud.colors.empty()) out.colors.push_back(cloud.colors[i]);
  }
  return out;
}

PointCloud crop_cloud(const PointCloud& cloud, const Rect2& region) {
  PointCloud out;
  out.source = cloud.source;
  out.frame = cloud.frame;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!region.contains(cloud.points[i].head<2>())) continue;
    out.points.push_back(cloud.points[i]);
    if (!cloud.colors.empty()) out.colors.push_back(cloud.colors[i]);
    if (!cloud.tags.empty()) out.tags.push_back(cloud.tags[i]);
  }
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const PoseSE3& pose) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = pose * p;
  return out;
}

PointCloud add_gaussian_noise(const PointCloud& cloud, double sigma, std::uint64_t seed) {
  PointCloud out = cloud;
  Rng rng(seed);
  for (auto& p : out.points) {
    for (int a = 0; a < 3; ++a) p[a] += sigma * normal01(rng);
  }
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw ConfigError("voxel_downsample: voxel size must be positive");
  struct KeyHash {
    std::size_t operator()(const Eigen::Vector3i& k) const noexcept {
      return std::size_t(k.x()) * 73856093u ^ std::size_t(k.y()) * 19349663u ^ std::size_t(k.z()) * 83492791u;
    }
  };
  struct KeyEq {
    bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const noexcept { return a == b; }
  };
  std::unordered_set<Eigen::Vector3i, KeyHash, KeyEq> seen;
  PointCloud out;
  out.source = cloud.source;
  out.frame = cloud.frame;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3i key = (cloud.points[i] / voxel).array().floor().cast<int>();
    if (!seen.insert(key).second) continue;
    out.points.push_back(cloud.points[i]);
    if (!cloud.colors.empty()) out.colors.push_back(cloud.colors[i]);
    if (!cloud.tags.empty()) out.tags.push_back(cloud.tags[i]);
  }
  return out;
}

}  // namespace sylva
