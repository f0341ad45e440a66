// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sylva/error.hpp"
#include "sylva/random.hpp"
#include "sylva/synth.hpp"

namespace sylva {
namespace {

constexpr double kTwoPi = 6.283185307179586;

void check_range(const Range& r, const char* name, bool allow_zero) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max || r.min < 0.0 ||
      (!allow_zero && r.min <= 0.0)) {
    throw ConfigError(std::string("invalid ") + name + " range");
  }
}

Vec3 jitter_color(const Vec3& base, double amount, Rng& rng) {
  Vec3 c;
  for (int k = 0; k < 3; ++k) c[k] = std::clamp(base[k] + uniform(rng, -amount, amount), 0.0, 1.0);
  return c;
}

}  // namespace

Vec3 GroundPlane::color_at(double x, double y) const {
  if (texture.amplitude == 0.0) return color;
  const double w = kTwoPi / texture.period;
  Vec3 c;
  for (int k = 0; k < 3; ++k) {
    const double m = 1.0 + texture.amplitude * std::sin(w * x + 2.1 * k) * std::cos(w * y + 1.3 * k);
    c[k] = std::clamp(color[k] * m, 0.0, 1.0);
  }
  return c;
}

void TreePrimitive::validate() const {
  if (!(trunk.radius > 0.0) || !std::isfinite(trunk.radius)) throw DataError("tree: trunk radius must be > 0");
  if (!(trunk.height > 0.0) || !std::isfinite(trunk.height)) throw DataError("tree: trunk height must be > 0");
  if (!(canopy.semi_axes.array() > 0.0).all() || !canopy.semi_axes.allFinite()) {
    throw DataError("tree: canopy semi-axes must be > 0");
  }
  if (!(canopy.center.z() > trunk.base.z())) throw DataError("tree: canopy center must lie above the trunk base");
}

void SceneDescription::validate() const {
  if (!(extent.max.array() >= extent.min.array()).all()) throw DataError("scene: empty extent");
  if (ground.texture.amplitude != 0.0 && !(ground.texture.period > 0.0)) {
    throw DataError("scene: texture period must be > 0");
  }
  constexpr double kSlack = 1e-9;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& t = trees[i];
    t.validate();
    const Vec2 p = t.trunk.base.head<2>();
    const double reach = std::max(t.trunk.radius, std::max(t.canopy.semi_axes.x(), t.canopy.semi_axes.y()));
    if (p.x() - reach < extent.min.x() - kSlack || p.x() + reach > extent.max.x() + kSlack ||
        p.y() - reach < extent.min.y() - kSlack || p.y() + reach > extent.max.y() + kSlack) {
      throw DataError("scene: tree " + std::to_string(i) + " outside extent");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if ((trees[j].trunk.base.head<2>() - p).norm() < spacing_min - kSlack) {
        throw DataError("scene: trees " + std::to_string(j) + " and " + std::to_string(i) + " closer than spacing_min");
      }
    }
  }
}

SceneDescription generate_forest(std::uint64_t seed, const Rect2& footprint, int n_trees, double spacing_min,
                                 Range dbh_range, Range height_range, const ForestOptions& opts) {
  if (n_trees < 0) throw ConfigError("n_trees must be >= 0");
  if (!(spacing_min >= 0.0)) throw ConfigError("spacing_min must be >= 0");
  if (!(footprint.area() > 0.0)) throw ConfigError("forest footprint has zero area");
  if (opts.n_mounds < 0) throw ConfigError("n_mounds must be >= 0");
  check_range(dbh_range, "dbh", false);
  check_range(height_range, "height", false);
  if (opts.n_mounds > 0) {
    check_range(opts.mound_radius, "mound radius", false);
    check_range(opts.mound_height, "mound height", false);
  }

  SceneDescription scene;
  scene.ground = opts.ground;
  scene.seed = seed;
  scene.spacing_min = spacing_min;

  Rng rng(mix_seed(seed, 0xf0e5));
  int attempts = 0;
  auto dart = [&](double margin, auto&& accept) -> Vec2 {
    const double x0 = footprint.min.x() + margin, x1 = footprint.max.x() - margin;
    const double y0 = footprint.min.y() + margin, y1 = footprint.max.y() - margin;
    while (attempts < opts.max_attempts) {
      ++attempts;
      const double x = uniform(rng, x0, x1);
      const double y = uniform(rng, y0, y1);
      if (x0 <= x1 && y0 <= y1 && accept(Vec2(x, y))) return {x, y};
    }
    throw DataError("infeasible packing: attempt budget of " + std::to_string(opts.max_attempts) + " exhausted");
  };

  const double slope = scene.ground.slope.norm();
  for (int i = 0; i < n_trees; ++i) {
    const double dbh = uniform(rng, dbh_range.min, dbh_range.max);
    const double h = uniform(rng, height_range.min, height_range.max);
    TreePrimitive tree;
    tree.trunk_color = jitter_color(tree.trunk_color, 0.04, rng);
    tree.canopy_color = jitter_color(tree.canopy_color, 0.06, rng);
    const double r = 0.5 * dbh;
    const double a = std::min(std::max(opts.canopy_radius_factor * h, opts.canopy_radius_min),
                              std::max(opts.canopy_radius_cap * spacing_min, r));
    const double c = opts.canopy_depth_factor * h;
    const Vec2 p = dart(std::max(a, r), [&](const Vec2& q) {
      return std::all_of(scene.trees.begin(), scene.trees.end(),
                         [&](const TreePrimitive& t) { return (t.trunk.base.head<2>() - q).norm() >= spacing_min; });
    });
    const double g = scene.ground.height_at(p.x(), p.y());
    tree.trunk.radius = r;
    tree.trunk.base = Vec3(p.x(), p.y(), g - r * slope);
    tree.canopy.center = Vec3(p.x(), p.y(), g + h - c);
    tree.canopy.semi_axes = Vec3(a, a, c);
    tree.trunk.height = tree.canopy.center.z() - tree.trunk.base.z();
    scene.trees.push_back(tree);
  }

  for (int i = 0; i < opts.n_mounds; ++i) {
    const double r = uniform(rng, opts.mound_radius.min, opts.mound_radius.max);
    const double hm = uniform(rng, opts.mound_height.min, opts.mound_height.max);
    Mound m;
    m.color = jitter_color(m.color, 0.05, rng);
    const Vec2 p = dart(r, [&](const Vec2& q) {
      return std::all_of(scene.trees.begin(), scene.trees.end(), [&](const TreePrimitive& t) {
        return (t.trunk.base.head<2>() - q).norm() >= r + t.trunk.radius + 0.5;
      });
    });
    m.shape.center = Vec3(p.x(), p.y(), scene.ground.height_at(p.x(), p.y()));
    m.shape.semi_axes = Vec3(r, r, hm);
    scene.mounds.push_back(m);
  }

  double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
  for (double x : {footprint.min.x(), footprint.max.x()}) {
    for (double y : {footprint.min.y(), footprint.max.y()}) {
      const double g = scene.ground.height_at(x, y);
      zmin = std::min(zmin, g);
      zmax = std::max(zmax, g);
    }
  }
  for (const auto& t : scene.trees) zmax = std::max(zmax, t.canopy.center.z() + t.canopy.semi_axes.z());
  for (const auto& m : scene.mounds) zmax = std::max(zmax, m.shape.center.z() + m.shape.semi_axes.z());
  scene.extent.min = Vec3(footprint.min.x(), footprint.min.y(), zmin - 0.5);
  scene.extent.max = Vec3(footprint.max.x(), footprint.max.y(), zmax + 0.5);
  return scene;
}

// ---------------------------------------------------------------------------
// Scene files

namespace {

using nlohmann::json;

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N) throw DataError(std::string("scene: ") + what + " must be an array of " + std::to_string(N));
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw DataError(std::string("scene: ") + what + " must be numeric");
    v[i] = j[i].get<double>();
  }
  return v;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("scene: missing key '") + key + "'");
  return *it;
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw DataError(std::string("scene: '") + key + "' must be a number");
  return v.get<double>();
}

json ellipsoid_json(const Ellipsoid& e) { return {{"center", vec_json(e.center)}, {"semi_axes", vec_json(e.semi_axes)}}; }

Ellipsoid ellipsoid_from(const json& j) {
  return {vec_from<3>(field(j, "center"), "center"), vec_from<3>(field(j, "semi_axes"), "semi_axes")};
}

}  // namespace

void save_scene(const SceneDescription& scene, const std::filesystem::path& path) {
  json j;
  j["format"] = "sylva-scene";
  j["version"] = 1;
  j["seed"] = scene.seed;
  j["spacing_min"] = scene.spacing_min;
  j["extent"] = {{"min", vec_json(scene.extent.min)}, {"max", vec_json(scene.extent.max)}};
  j["sky_color"] = vec_json(scene.sky_color);
  j["ground"] = {{"height", scene.ground.height},
                 {"slope", vec_json(scene.ground.slope)},
                 {"color", vec_json(scene.ground.color)},
                 {"texture", {{"amplitude", scene.ground.texture.amplitude}, {"period", scene.ground.texture.period}}}};
  j["trees"] = json::array();
  for (const auto& t : scene.trees) {
    j["trees"].push_back({{"trunk",
                           {{"base", vec_json(t.trunk.base)}, {"radius", t.trunk.radius}, {"height", t.trunk.height}}},
                          {"canopy", ellipsoid_json(t.canopy)},
                          {"trunk_color", vec_json(t.trunk_color)},
                          {"canopy_color", vec_json(t.canopy_color)}});
  }
  j["mounds"] = json::array();
  for (const auto& m : scene.mounds) {
    json e = ellipsoid_json(m.shape);
    e["color"] = vec_json(m.color);
    j["mounds"].push_back(e);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

SceneDescription load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scene file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError("scene: malformed JSON in " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "sylva-scene") throw DataError("scene: not a sylva-scene file");
  if (j.value("version", 0) != 1) throw DataError("scene: unsupported version");

  SceneDescription s;
  const json& seed = field(j, "seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) throw DataError("scene: 'seed' must be an integer");
  s.seed = seed.get<std::uint64_t>();
  s.spacing_min = number(j, "spacing_min");
  const json& ext = field(j, "extent");
  s.extent.min = vec_from<3>(field(ext, "min"), "extent.min");
  s.extent.max = vec_from<3>(field(ext, "max"), "extent.max");
  if (j.contains("sky_color")) s.sky_color = vec_from<3>(j["sky_color"], "sky_color");
  const json& g = field(j, "ground");
  s.ground.height = number(g, "height");
  s.ground.slope = vec_from<2>(field(g, "slope"), "ground.slope");
  s.ground.color = vec_from<3>(field(g, "color"), "ground.color");
  if (g.contains("texture")) {
    s.ground.texture.amplitude = number(g["texture"], "amplitude");
    s.ground.texture.period = number(g["texture"], "period");
  }
  for (const json& t : field(j, "trees")) {
    TreePrimitive tree;
    const json& trunk = field(t, "trunk");
    tree.trunk.base = vec_from<3>(field(trunk, "base"), "trunk.base");
    tree.trunk.radius = number(trunk, "radius");
    tree.trunk.height = number(trunk, "height");
    tree.canopy = ellipsoid_from(field(t, "canopy"));
    tree.trunk_color = vec_from<3>(field(t, "trunk_color"), "trunk_color");
    tree.canopy_color = vec_from<3>(field(t, "canopy_color"), "canopy_color");
    s.trees.push_back(tree);
  }
  if (j.contains("mounds")) {
    for (const json& m : j["mounds"]) {
      Mound mound;
      mound.shape = ellipsoid_from(m);
      mound.color = vec_from<3>(field(m, "color"), "mound color");
      s.mounds.push_back(mound);
    }
  }
  s.validate();
  return s;
}

}  // namespace sylva
