// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "sylva/error.hpp"
#include "sylva/lidar.hpp"
#include "sylva/random.hpp"
#include "test_support.hpp"

using namespace sylva;
using sylva::test::deg;

namespace {

/// Wavy terrain with three vertical posts, sampled at random so that no lattice
/// aliasing traps nearest-neighbour matching.
PointCloud terrain_cloud(std::uint64_t seed = 11) {
  Rng rng(seed);
  PointCloud c;
  const auto height = [](double x, double y) { return 0.4 * std::sin(0.7 * x) * std::cos(0.5 * y) + 0.05 * x; };
  for (int i = 0; i < 4225; ++i) {
    const double x = uniform(rng, -8, 8);
    const double y = uniform(rng, -8, 8);
    c.points.emplace_back(x, y, height(x, y));
  }
  for (const Vec2 post : {Vec2(-3, 2), Vec2(4, -1), Vec2(1, 5)}) {
    for (int i = 0; i < 288; ++i) {
      const double t = uniform(rng, 0, 2 * M_PI);
      c.points.emplace_back(post.x() + 0.3 * std::cos(t), post.y() + 0.3 * std::sin(t), uniform(rng, 0.2, 3.0));
    }
  }
  return c;
}

double translation_error(const PoseSE3& est, const PoseSE3& truth) { return (est.translation - truth.translation).norm(); }
double rotation_error_deg(const PoseSE3& est, const PoseSE3& truth) {
  return deg(rotation_angle(est.rotation * truth.rotation.transpose()));
}

}  // namespace

TEST_SUITE("lidar") {
  TEST_CASE("ply round trip") {
    const auto dir = sylva::test::tmp_dir("ply");
    Rng rng(1);
    PointCloud c;
    c.source = SourceTag::kTLS;
    c.frame = "plot7";
    for (int i = 0; i < 50; ++i) {
      c.points.emplace_back(normal01(rng) * 1e3, normal01(rng), normal01(rng) * 1e-7);
      c.colors.push_back({std::uint8_t(rng() % 256), std::uint8_t(rng() % 256), std::uint8_t(rng() % 256)});
    }
    save_ply(c, dir / "c.ply");
    const PointCloud back = load_ply(dir / "c.ply");
    CHECK(back.points == c.points);
    CHECK(back.colors == c.colors);
    CHECK(back.source == SourceTag::kTLS);
    CHECK(back.frame == "plot7");

    PointCloud a, b;
    a.points = {Vec3(1, 2, 3)};
    a.source = SourceTag::kALS;
    b.points = {Vec3(4, 5, 6)};
    b.source = SourceTag::kNERF;
    const PointCloud mixed = merge(std::vector<PointCloud>{a, b});
    save_ply(mixed, dir / "m.ply");
    const PointCloud mback = load_ply(dir / "m.ply");
    CHECK(mback.tag(0) == SourceTag::kALS);
    CHECK(mback.tag(1) == SourceTag::kNERF);

    save_ply(PointCloud{}, dir / "e.ply");
    CHECK(load_ply(dir / "e.ply").empty());
  }

  TEST_CASE("ply diagnostics") {
    const auto dir = sylva::test::tmp_dir("ply_bad");
    std::ofstream(dir / "magic.ply") << "plx\nformat binary_little_endian 1.0\nend_header\n";
    CHECK_THROWS_WITH_AS(load_ply(dir / "magic.ply"), doctest::Contains("bad magic"), DataError);
    std::ofstream(dir / "header.ply") << "ply\nformat ascii 1.0\nelement vertex 1\nend_header\n";
    CHECK_THROWS_WITH_AS(load_ply(dir / "header.ply"), doctest::Contains("malformed header"), DataError);
    PointCloud c;
    c.points = {Vec3(1, 2, 3), Vec3(4, 5, 6)};
    save_ply(c, dir / "full.ply");
    const std::string bytes = sylva::test::file_bytes(dir / "full.ply");
    std::ofstream(dir / "cut.ply", std::ios::binary) << bytes.substr(0, bytes.size() - 5);
    CHECK_THROWS_WITH_AS(load_ply(dir / "cut.ply"), doctest::Contains("truncated payload"), DataError);
    CHECK_THROWS_AS(load_ply(dir / "nope.ply"), DataError);
  }

  TEST_CASE("density") {
    PointCloud c;
    for (int i = 0; i < 100; ++i) c.points.emplace_back(0.1 * (i % 10) + 0.05, 0.01 * (i / 10), 5.0);
    CHECK(cloud_density(c, Rect2{Vec2(0, 0), Vec2(10, 1)}) == doctest::Approx(10.0));
    CHECK(cloud_density(PointCloud{}, Rect2{Vec2(0, 0), Vec2(1, 1)}) == 0.0);
    CHECK_THROWS_AS(cloud_density(c, Rect2{Vec2(0, 0), Vec2(0, 1)}), ConfigError);
  }

  TEST_CASE("merge and filter") {
    PointCloud a, b;
    a.points = {Vec3(1, 0, 0), Vec3(2, 0, 0)};
    a.source = SourceTag::kALS;
    b.points = {Vec3(3, 0, 0)};
    b.source = SourceTag::kTLS;
    const PointCloud one = merge(std::vector<PointCloud>{a});
    CHECK(one.points == a.points);
    CHECK(one.tag(1) == SourceTag::kALS);
    const PointCloud ab = merge(std::vector<PointCloud>{a, b});
    CHECK(ab.size() == 3);
    CHECK(filter_by_source(ab, SourceTag::kALS).points == a.points);
    CHECK(filter_by_source(ab, SourceTag::kTLS).points == b.points);
    b.frame = "other";
    CHECK_THROWS_AS(merge(std::vector<PointCloud>{a, b}), DataError);
  }

  TEST_CASE("crop, noise and voxel filters") {
    PointCloud c;
    c.points = {Vec3(0, 0, 0), Vec3(0.01, 0.01, 0.01), Vec3(5, 5, 0), Vec3(-1, 0.5, 3)};
    const PointCloud cropped = crop_cloud(c, Rect2{Vec2(-1, -1), Vec2(1, 1)});
    CHECK(cropped.size() == 3);
    const PointCloud vox = voxel_downsample(c, 0.5);
    CHECK(vox.size() == 3);
    CHECK(vox.points[0] == c.points[0]);
    const PointCloud n1 = add_gaussian_noise(c, 0.01, 4), n2 = add_gaussian_noise(c, 0.01, 4);
    CHECK(n1.points == n2.points);
    CHECK(n1.points != c.points);
    c.colors.resize(2);
    CHECK_THROWS_AS(c.validate(), DataError);
  }

  TEST_CASE("spatial grid agrees with brute force") {
    Rng rng(5);
    std::vector<Vec3> pts;
    for (int i = 0; i < 2000; ++i) pts.emplace_back(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, 0, 2));
    pts.push_back(pts[10]);
    const SpatialGrid grid(pts, 0.3);
    for (int q = 0; q < 200; ++q) {
      const Vec3 query(uniform(rng, -6, 6), uniform(rng, -6, 6), uniform(rng, -1, 3));
      const double radius = uniform(rng, 0.1, 1.5);
      std::optional<std::size_t> best;
      double best_d = radius * radius;
      std::vector<std::size_t> inside;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = (pts[i] - query).squaredNorm();
        if (d <= radius * radius) inside.push_back(i);
        if (d <= best_d && (!best || d < best_d)) {
          best = i;
          best_d = d;
        }
      }
      const auto hit = grid.nearest(query, radius);
      REQUIRE(hit.has_value() == best.has_value());
      if (hit) {
        CHECK(hit->index == *best);
        CHECK(hit->distance_sq == best_d);
      }
      std::vector<std::size_t> got;
      grid.within(query, radius, got);
      CHECK(got == inside);
    }
    const auto self = grid.nearest(pts[10], 1.0, 10);
    REQUIRE(self);
    CHECK(self->index == pts.size() - 1);
  }

  TEST_CASE("median spacing of a lattice") {
    std::vector<Vec3> pts;
    for (int i = 0; i < 30; ++i) {
      for (int j = 0; j < 30; ++j) pts.emplace_back(0.2 * i, 0.2 * j, 0);
    }
    CHECK(median_spacing(pts) == doctest::Approx(0.2));
  }

  TEST_CASE("identical clouds register to identity") {
    const PointCloud c = terrain_cloud();
    for (IcpMetric metric : {IcpMetric::kPointToPoint, IcpMetric::kPointToPlane}) {
      IcpConfig cfg;
      cfg.metric = metric;
      const RegistrationResult r = coregister_icp(c, c, PoseSE3::identity(), cfg);
      CHECK(translation_error(r.transform, PoseSE3::identity()) < 1e-9);
      CHECK((r.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(r.rms_residual < 1e-9);
      CHECK(r.converged);
    }
  }

  TEST_CASE("known rigid transform is recovered") {
    const PointCloud target = terrain_cloud();
    const PoseSE3 move = PoseSE3::from_axis_angle(Vec3(0.3, -0.5, 1.0), 3.0 * M_PI / 180, Vec3(0.3, -0.3, 0.28));
    REQUIRE(move.translation.norm() == doctest::Approx(0.5).epsilon(0.01));
    const PointCloud source = transform_cloud(target, move);
    const PoseSE3 truth = invert(move);
    for (IcpMetric metric : {IcpMetric::kPointToPoint, IcpMetric::kPointToPlane}) {
      IcpConfig cfg;
      cfg.metric = metric;
      cfg.max_iter = 100;
      const RegistrationResult r = coregister_icp(source, target, PoseSE3::identity(), cfg);
      CHECK(translation_error(r.transform, truth) < 0.06);
      CHECK(rotation_error_deg(r.transform, truth) < 0.1);
      for (std::size_t i = 1; i < r.residual_history.size(); ++i) {
        CHECK(r.residual_history[i] <= r.residual_history[i - 1]);
      }
    }
  }

  TEST_CASE("staged gates") {
    const PointCloud target = terrain_cloud();
    Rng rng(6);
    const PoseSE3 move = sylva::test::random_pose(rng, 1.0, 5.0);
    const PointCloud source = add_gaussian_noise(transform_cloud(target, move), 0.01, 3);
    IcpConfig cfg;
    cfg.metric = IcpMetric::kPointToPlane;
    cfg.max_iter = 100;
    const std::vector<double> gates = {1.5, 0.5, 0.2};
    const RegistrationResult r = coregister_staged(source, target, PoseSE3::identity(), cfg, gates);
    CHECK(translation_error(r.transform, invert(move)) < 0.06);
    CHECK(rotation_error_deg(r.transform, invert(move)) < 0.1);
    CHECK_THROWS_AS(coregister_staged(source, target, PoseSE3::identity(), cfg, {}), ConfigError);
  }

  TEST_CASE("degenerate registration is reported") {
    PointCloud a, b;
    for (int i = 0; i < 50; ++i) {
      a.points.emplace_back(0.1 * i, 0, 0);
      b.points.emplace_back(100 + 0.1 * i, 0, 0);
    }
    bool flagged = false;
    try {
      flagged = !coregister_icp(a, b, PoseSE3::identity()).converged;
    } catch (const NumericalError& e) {
      flagged = std::string(e.what()).find("unconstrained registration") != std::string::npos;
    }
    CHECK(flagged);
    CHECK_THROWS_AS(coregister_icp(PointCloud{}, b, PoseSE3::identity()), DataError);
  }
}
