// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sylva/field.hpp"
#include "sylva/geometry.hpp"
#include "sylva/random.hpp"

namespace sylva::test {

inline std::filesystem::path tmp_dir(const std::string& name) {
  auto dir = std::filesystem::path(SYLVA_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(normal01(rng), normal01(rng), normal01(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline PoseSE3 random_pose(Rng& rng, double max_translation, double max_angle_deg) {
  const double angle = uniform(rng, 0.0, max_angle_deg) * M_PI / 180.0;
  const Vec3 t = random_unit(rng) * uniform(rng, 0.0, max_translation);
  return PoseSE3::from_axis_angle(random_unit(rng), angle, t);
}

inline double deg(double rad) { return rad * 180.0 / M_PI; }

/// Density softplus(k (z0 - z) - 20): transparent above the plane z = z0,
/// opaque a few centimeters below it. Color is constant `rgb_logit` through the bias.
inline FieldParams opaque_plane_field(double z0, double k = 1000.0) {
  FieldParams p = init_params(EncodingConfig{0, 0}, 2, 0);
  std::fill(p.values.begin(), p.values.end(), 0.0);
  const FieldLayout& l = p.layout;
  p.view(l.w1)(0, 2) = -k;
  p.view(l.b1)(0, 0) = k * z0;
  p.view(l.w2)(0, 0) = 1.0;
  p.view(l.w_sigma)(0, 0) = 1.0;
  p.view(l.b_sigma)(0, 0) = -20.0;
  return p;
}

}  // namespace sylva::test
