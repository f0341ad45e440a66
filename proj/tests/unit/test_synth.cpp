// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "sylva/error.hpp"
#include "sylva/synth.hpp"
#include "test_support.hpp"

using namespace sylva;

namespace {

SceneDescription flat_scene() {
  SceneDescription s;
  s.extent = Aabb{Vec3(-10, -10, -1), Vec3(10, 10, 1)};
  return s;
}

TreePrimitive tree_at(double x, double y, double radius, double height) {
  TreePrimitive t;
  t.trunk = {Vec3(x, y, 0), radius, height};
  t.canopy = {Vec3(x, y, height + 1.5), Vec3(1.2, 1.2, 2.0)};
  return t;
}

const Rect2 kPlot{Vec2(-15, -15), Vec2(15, 15)};

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("forest generation") {
    const SceneDescription empty = generate_forest(1, kPlot, 0, 3.0, {0.2, 0.4}, {8, 12});
    CHECK(empty.trees.empty());
    const SceneDescription a = generate_forest(4, kPlot, 25, 3.0, {0.2, 0.4}, {8, 12});
    const SceneDescription b = generate_forest(4, kPlot, 25, 3.0, {0.2, 0.4}, {8, 12});
    REQUIRE(a.trees.size() == 25);
    for (std::size_t i = 0; i < a.trees.size(); ++i) {
      CHECK(a.trees[i].trunk.base == b.trees[i].trunk.base);
      CHECK(a.trees[i].trunk.radius == b.trees[i].trunk.radius);
      CHECK(a.trees[i].dbh() >= 0.2);
      CHECK(a.trees[i].dbh() <= 0.4);
      for (std::size_t j = 0; j < i; ++j) {
        const double d = (a.trees[i].trunk.base.head<2>() - a.trees[j].trunk.base.head<2>()).norm();
        CHECK(d >= 3.0);
      }
    }
    const SceneDescription c = generate_forest(5, kPlot, 25, 3.0, {0.2, 0.4}, {8, 12});
    CHECK(c.trees[0].trunk.base != a.trees[0].trunk.base);
    a.validate();
    CHECK_THROWS_WITH_AS(generate_forest(1, Rect2{Vec2(0, 0), Vec2(5, 5)}, 50, 3.0, {0.2, 0.4}, {8, 12}),
                         doctest::Contains("infeasible packing"), DataError);
  }

  TEST_CASE("canopies clear each other and trunks stand on the ground") {
    ForestOptions opts;
    opts.ground.slope = Vec2(0.08, -0.05);
    opts.n_mounds = 6;
    const SceneDescription s = generate_forest(9, kPlot, 20, 4.0, {0.2, 0.5}, {8, 14}, opts);
    for (const auto& t : s.trees) {
      const Vec3& b = t.trunk.base;
      CHECK(b.z() <= s.ground.height_at(b.x(), b.y()));
      CHECK(t.trunk.base.z() + t.trunk.height >= t.canopy.center.z() - 1e-9);
      CHECK(t.canopy.semi_axes.x() <= 0.42 * 4.0 + 1e-12);
    }
    for (const auto& m : s.mounds) {
      for (const auto& t : s.trees) {
        CHECK((m.shape.center.head<2>() - t.trunk.base.head<2>()).norm() >= m.shape.semi_axes.x() + t.trunk.radius);
      }
    }
  }

  TEST_CASE("analytic trace examples") {
    const SceneDescription s = flat_scene();
    const auto down = trace_ray_exact(s, Ray{Vec3(0, 0, 10), Vec3(0, 0, -1)});
    REQUIRE(down);
    CHECK(down->distance == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(down->color == s.ground.color);
    CHECK(down->primitive.kind == PrimitiveKind::kGround);

    SceneDescription t = flat_scene();
    t.trees.push_back(tree_at(5, 0, 0.25, 6));
    const auto side = trace_ray_exact(t, Ray{Vec3(0, 0, 1.3), Vec3::UnitX()});
    REQUIRE(side);
    CHECK(side->distance == doctest::Approx(4.75).epsilon(1e-14));
    CHECK(side->primitive == PrimitiveRef{PrimitiveKind::kTrunk, 0});

    CHECK_FALSE(trace_ray_exact(t, Ray{Vec3(0, 0, 50), Vec3::UnitX()}));
    CHECK_FALSE(trace_ray_exact(t, Ray{Vec3(0, 0, 1.3), Vec3::UnitX(), 0.0, 4.0}));

    TraceOptions skip;
    skip.skip_canopies = true;
    const Ray into_canopy{Vec3(5, 0, 30), Vec3(0, 0, -1)};
    CHECK(trace_ray_exact(t, into_canopy)->primitive.kind == PrimitiveKind::kCanopy);
    CHECK(trace_ray_exact(t, into_canopy, skip)->primitive.kind == PrimitiveKind::kTrunk);
  }

  TEST_CASE("inside_solid") {
    SceneDescription t = flat_scene();
    t.trees.push_back(tree_at(5, 0, 0.25, 6));
    CHECK(inside_solid(t, Vec3(5, 0, 1)));
    CHECK(inside_solid(t, Vec3(0, 0, -0.1)));
    CHECK(inside_solid(t, Vec3(5, 0.5, 7.5)));
    CHECK_FALSE(inside_solid(t, Vec3(0, 0, 1.5)));
  }

  TEST_CASE("views agree with the oracle") {
    ForestOptions opts;
    opts.ground.texture = {0.3, 4.0};
    opts.n_mounds = 3;
    const SceneDescription s = generate_forest(2, kPlot, 10, 4.0, {0.2, 0.5}, {8, 12}, opts);
    const CameraIntrinsics k = CameraIntrinsics::from_fov(32, 24, 50);
    auto cams = orbit_rig(Vec3(0, 0, 4), 20, 8, 3, k);
    const auto aerial = aerial_rig(Rect2{Vec2(-5, -5), Vec2(5, 5)}, 40, 2, 1, k);
    cams.insert(cams.end(), aerial.begin(), aerial.end());
    const auto views = render_views(s, cams, 2);
    for (std::size_t c = 0; c < cams.size(); ++c) {
      for (int y = 0; y < k.height; ++y) {
        for (int x = 0; x < k.width; ++x) {
          const Ray r = ray_from_pixel(k, cams[c].pose, PixelCoord::center_of(x, y), 0,
                                       std::numeric_limits<double>::infinity());
          const auto hit = trace_ray_exact(s, r);
          if (hit) {
            CHECK(views[c].depth.at(x, y) == hit->distance);
            CHECK(views[c].color.at(x, y) == hit->color);
          } else {
            CHECK(std::isinf(views[c].depth.at(x, y)));
            CHECK(views[c].color.at(x, y) == s.sky_color);
          }
        }
      }
    }
    CHECK(views[0].color.pixels != views[1].color.pixels);
  }

  TEST_CASE("simple views") {
    const SceneDescription s = flat_scene();
    const CameraIntrinsics k = CameraIntrinsics::from_fov(16, 16, 60);
    const Camera up{k, PoseSE3::look_at(Vec3(0, 0, 2), Vec3(0, 0, 10), Vec3::UnitY())};
    const auto sky = render_views(s, std::span(&up, 1));
    for (const auto& p : sky[0].color.pixels) CHECK(p == s.sky_color);
    const auto nadir = aerial_rig(Rect2{Vec2(0, 0), Vec2(0, 0)}, 60, 1, 1, k);
    const auto v = render_views(s, nadir);
    // Range along each pixel ray; its optical-axis component is the altitude.
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        const Ray r = ray_from_pixel(k, nadir[0].pose, PixelCoord::center_of(x, y), 0, 1e9);
        CHECK(v[0].depth.at(x, y) * -r.direction.z() == doctest::Approx(60.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("rigs") {
    const CameraIntrinsics k = CameraIntrinsics::from_fov(8, 8, 40);
    const auto a = aerial_rig(Rect2{Vec2(-4, -2), Vec2(4, 2)}, 60, 3, 2, k);
    REQUIRE(a.size() == 6);
    for (const auto& c : a) {
      CHECK((c.pose.rotation.col(2) - Vec3(0, 0, -1)).norm() < 1e-12);
      CHECK(c.pose.translation.z() == 60.0);
      c.pose.validate();
    }
    const auto o = orbit_rig(Vec3(1, 2, 0), 5, 3, 4, k, 45);
    REQUIRE(o.size() == 4);
    for (const auto& c : o) {
      const Vec3 to_target = (Vec3(1, 2, 0) - c.pose.translation).normalized();
      CHECK((c.pose.rotation.col(2) - to_target).norm() < 1e-12);
      CHECK((c.pose.translation.head<2>() - Vec2(1, 2)).norm() == doctest::Approx(5.0));
    }
  }

  TEST_CASE("ALS simulation") {
    SceneDescription g = flat_scene();
    AlsConfig cfg;
    cfg.seed = 3;
    const ScanResult ground = simulate_als(g, cfg);
    for (const auto& p : ground.cloud.points) CHECK(std::abs(p.z()) < 1e-9);
    const double density = cloud_density(ground.cloud, Rect2{Vec2(-10, -10), Vec2(10, 10)});
    CHECK(density == doctest::Approx(10.0).epsilon(0.1));
    CHECK(ground.cloud.source == SourceTag::kALS);

    ForestOptions opts;
    opts.ground.slope = Vec2(0.05, 0.02);
    opts.n_mounds = 4;
    const SceneDescription s = generate_forest(7, kPlot, 15, 4.0, {0.2, 0.5}, {8, 12}, opts);
    const ScanResult scan = simulate_als(s, cfg);
    REQUIRE(scan.hits.size() == scan.cloud.size());
    for (std::size_t i = 0; i < scan.cloud.size(); ++i) {
      CHECK(surface_residual(s, scan.hits[i], scan.cloud.points[i]) <= 1e-9);
      // Trunks sit wholly under their canopy footprints, so nadir pulses never reach them.
      CHECK(scan.hits[i].kind != PrimitiveKind::kTrunk);
    }
    const ScanResult again = simulate_als(s, cfg);
    CHECK(again.cloud.points == scan.cloud.points);
    AlsConfig low = cfg;
    low.altitude = 5;
    CHECK_THROWS_AS(simulate_als(s, low), ConfigError);
  }

  TEST_CASE("TLS simulation") {
    const SceneDescription g = flat_scene();
    TlsConfig cfg;
    cfg.angular_res_deg = 1.0;
    cfg.max_range = 30;
    const ScanResult scan = simulate_tls(g, cfg);
    // Rows sit at -90 + (j + 0.5) degrees; a row reaches the ground within range when
    // 1.5 / sin(-elevation) <= 30.
    std::size_t rows = 0;
    for (int j = 0; j < 180; ++j) {
      const double el = (-90.0 + j + 0.5) * M_PI / 180;
      if (el < 0 && 1.5 / std::sin(-el) <= 30) ++rows;
    }
    CHECK(scan.rays_cast == 360u * 180u);
    CHECK(scan.cloud.size() == rows * 360);
    for (const auto& p : scan.cloud.points) CHECK(std::abs(p.z()) < 1e-9);

    SceneDescription s = flat_scene();
    s.trees.push_back(tree_at(3, 0, 0.3, 8));
    s.trees.push_back(tree_at(8, 0, 1.0, 8));
    s.trees.back().canopy.semi_axes = Vec3(1.5, 1.5, 2.0);
    cfg.angular_res_deg = 0.2;
    const ScanResult sh = simulate_tls(s, cfg, 2);
    const double shadow = std::asin(0.3 / 3.0);
    std::size_t far_hits = 0;
    for (std::size_t i = 0; i < sh.cloud.size(); ++i) {
      CHECK(surface_residual(s, sh.hits[i], sh.cloud.points[i]) <= 1e-9);
      if (sh.hits[i] != PrimitiveRef{PrimitiveKind::kTrunk, 1}) continue;
      const Vec3 d = sh.cloud.points[i] - cfg.origin;
      CHECK(std::abs(std::atan2(d.y(), d.x())) >= shadow - 1e-9);
      ++far_hits;
    }
    CHECK(far_hits > 0);
    const ScanResult again = simulate_tls(s, cfg, 1);
    CHECK(again.cloud.points == sh.cloud.points);

    TlsConfig buried = cfg;
    buried.origin = Vec3(3, 0, 1.0);
    CHECK_THROWS_AS(simulate_tls(s, buried), ConfigError);
  }

  TEST_CASE("noisy scans are seeded") {
    const SceneDescription s = generate_forest(3, kPlot, 8, 4.0, {0.2, 0.5}, {8, 12});
    TlsConfig cfg;
    cfg.angular_res_deg = 1.0;
    cfg.range_noise = 0.01;
    cfg.seed = 8;
    cfg.origin = Vec3(0.1, 0.2, 1.5);
    while (inside_solid(s, cfg.origin)) cfg.origin.x() += 0.7;
    CHECK(simulate_tls(s, cfg).cloud.points == simulate_tls(s, cfg, 3).cloud.points);
    TlsConfig other = cfg;
    other.seed = 9;
    CHECK(simulate_tls(s, cfg).cloud.points != simulate_tls(s, other).cloud.points);
  }

  TEST_CASE("scene files") {
    const auto dir = sylva::test::tmp_dir("scene");
    ForestOptions opts;
    opts.ground.slope = Vec2(0.1, -0.2);
    opts.ground.texture = {0.2, 3.0};
    opts.n_mounds = 2;
    const SceneDescription s = generate_forest(12, kPlot, 6, 4.0, {0.2, 0.5}, {8, 12}, opts);
    save_scene(s, dir / "scene.json");
    const SceneDescription b = load_scene(dir / "scene.json");
    REQUIRE(b.trees.size() == s.trees.size());
    REQUIRE(b.mounds.size() == s.mounds.size());
    for (std::size_t i = 0; i < s.trees.size(); ++i) {
      CHECK(b.trees[i].trunk.base == s.trees[i].trunk.base);
      CHECK(b.trees[i].canopy.semi_axes == s.trees[i].canopy.semi_axes);
      CHECK(b.trees[i].canopy_color == s.trees[i].canopy_color);
    }
    CHECK(b.ground.slope == s.ground.slope);
    CHECK(b.ground.texture.period == 3.0);
    CHECK(b.extent.min == s.extent.min);
    save_scene(b, dir / "again.json");
    CHECK(sylva::test::file_bytes(dir / "scene.json") == sylva::test::file_bytes(dir / "again.json"));

    std::ofstream(dir / "bad.json") << "{\"format\": \"sylva-scene\", \"version\": 1}";
    CHECK_THROWS_AS(load_scene(dir / "bad.json"), DataError);
    std::ofstream(dir / "junk.json") << "not json";
    CHECK_THROWS_AS(load_scene(dir / "junk.json"), DataError);
  }
}
