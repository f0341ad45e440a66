// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "sylva/error.hpp"
#include "sylva/renderer.hpp"
#include "test_support.hpp"

using namespace sylva;

namespace {

Ray ray_z(double t_near, double t_far) { return Ray{Vec3::Zero(), Vec3::UnitZ(), t_near, t_far}; }

struct Medium {
  std::vector<double> sigma;
  std::vector<Vec3> color;
};

Medium random_medium(Rng& rng, std::size_t n) {
  Medium m;
  for (std::size_t i = 0; i < n; ++i) {
    m.sigma.push_back(uniform(rng, 0.0, 3.0));
    m.color.emplace_back(uniform01(rng), uniform01(rng), uniform01(rng));
  }
  return m;
}

// Upper bound of the chi-square distribution with 19 degrees of freedom at p = 0.01.
constexpr double kChi2Df19P01 = 36.191;

}  // namespace

TEST_SUITE("renderer") {
  TEST_CASE("stratified midpoints") {
    const SampleSet s = sample_stratified(ray_z(0, 4), 4);
    CHECK(s.ts == std::vector<double>{0.5, 1.5, 2.5, 3.5});
    CHECK(s.deltas == std::vector<double>{1.0, 1.0, 1.0, 0.5});
    CHECK_THROWS_AS(sample_stratified(ray_z(0, 4), 1), ConfigError);
  }

  TEST_CASE("jittered samples stay in their bins") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const SampleSet s = sample_stratified(ray_z(2, 10), 8, seed);
      for (int i = 0; i < 8; ++i) {
        CHECK(s.ts[i] >= 2 + i);
        CHECK(s.ts[i] < 3 + i);
      }
    }
    CHECK(sample_stratified(ray_z(2, 10), 8, 5).ts == sample_stratified(ray_z(2, 10), 8, 5).ts);
    CHECK(sample_stratified(ray_z(2, 10), 8, 5).ts != sample_stratified(ray_z(2, 10), 8, 6).ts);
  }

  TEST_CASE("sample set validation") {
    CHECK_THROWS_AS(make_sample_set({1.0, 1.0}, 0, 2), ConfigError);
    CHECK_THROWS_AS(make_sample_set({1.0, 3.0}, 0, 2), ConfigError);
    const SampleSet s = make_sample_set({0.5, 1.0}, 0, 2);
    CHECK(s.deltas == std::vector<double>{0.5, 1.0});
  }

  TEST_CASE("transparent medium") {
    const SampleSet s = sample_stratified(ray_z(0, 4), 8);
    const std::vector<double> sigma(8, 0.0);
    const std::vector<Vec3> color(8, Vec3(1, 0.5, 0.2));
    const RenderResult r = composite(sigma, color, s);
    CHECK(r.color == Vec3::Zero());
    CHECK(r.accumulated_alpha == 0.0);
    CHECK(r.sky);
    for (double w : r.weights) CHECK(w == 0.0);
  }

  TEST_CASE("two sample composite by hand") {
    const SampleSet s = make_sample_set({1.0, 2.0}, 0.5, 3.0);
    const std::vector<double> sigma = {std::log(2.0), 1e9};
    const std::vector<Vec3> color = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
    const RenderResult r = composite(sigma, color, s);
    CHECK(r.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.weights[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK((r.color - Vec3(0.5, 0.5, 0)).norm() < 1e-14);
    CHECK(r.depth == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(r.depth_std == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_FALSE(r.sky);
  }

  TEST_CASE("opaque single sample") {
    const SampleSet s = make_sample_set({2.0}, 0, 3.0);
    const std::vector<double> sigma = {40.0};
    const std::vector<Vec3> color = {Vec3(0.2, 0.3, 0.4)};
    const RenderResult r = composite(sigma, color, s);
    CHECK(std::abs(r.weights[0] - 1.0) < 1e-12);
    CHECK(r.depth == doctest::Approx(2.0));
    CHECK(r.depth_std == 0.0);
  }

  TEST_CASE("composite input checks") {
    const SampleSet s = make_sample_set({1.0, 2.0}, 0, 3);
    const std::vector<double> neg = {1.0, -0.5};
    const std::vector<Vec3> color(2, Vec3::Zero());
    CHECK_THROWS_AS(composite(neg, color, s), ConfigError);
    const std::vector<double> one = {1.0};
    CHECK_THROWS_AS(composite(one, color, s), ConfigError);
  }

  TEST_CASE("background and renormalization") {
    Rng rng(3);
    const SampleSet s = sample_stratified(ray_z(1, 5), 16);
    Medium m = random_medium(rng, 16);
    for (auto& v : m.sigma) v *= 0.05;
    const RenderResult plain = composite(m.sigma, m.color, s);
    CompositeOptions o;
    o.background = Vec3(0.1, 0.2, 0.9);
    const RenderResult bg = composite(m.sigma, m.color, s, o);
    const double a = plain.accumulated_alpha;
    REQUIRE(a < 0.99);
    CHECK((bg.color - (plain.color + (1 - a) * *o.background)).norm() < 1e-14);
    o.renormalize = true;
    const RenderResult rn = composite(m.sigma, m.color, s, o);
    CHECK(rn.depth == doctest::Approx(plain.depth / a).epsilon(1e-12));
    CHECK(rn.depth >= s.t_near);
    CHECK(rn.depth <= s.t_far);
  }

  TEST_CASE("composite backward matches central differences") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      const SampleSet s = sample_stratified(ray_z(0.5, 4.5), 8, std::uint64_t(trial));
      Medium m = random_medium(rng, 8);
      CompositeOptions o;
      if (trial % 2) o.background = Vec3(0.3, 0.6, 0.1);
      const Vec3 dc(normal01(rng), normal01(rng), normal01(rng));
      const double dz = normal01(rng);
      auto f = [&](const Medium& q) {
        const RenderResult r = composite(q.sigma, q.color, s, o);
        return dc.dot(r.color) + dz * r.depth;
      };
      const RenderResult r = composite(m.sigma, m.color, s, o);
      std::vector<double> gs(8);
      std::vector<Vec3> gc(8);
      composite_backward(m.sigma, m.color, s, r, o, dc, dz, gs, gc);
      const double h = 1e-6;
      for (int i = 0; i < 8; ++i) {
        Medium a = m, b = m;
        a.sigma[i] += h;
        b.sigma[i] -= h;
        const double fd = (f(a) - f(b)) / (2 * h);
        CHECK(std::abs(fd - gs[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
        for (int c = 0; c < 3; ++c) {
          Medium p = m, q = m;
          p.color[i][c] += h;
          q.color[i][c] -= h;
          const double fdc = (f(p) - f(q)) / (2 * h);
          CHECK(std::abs(fdc - gc[i][c]) <= 1e-6 * std::max(1.0, std::abs(fdc)));
        }
      }
    }
  }

  TEST_CASE("uniform weights resample uniformly") {
    const SampleSet coarse = sample_stratified(ray_z(0, 20), 20);
    const std::vector<double> w(20, 0.05);
    const int n_fine = 10000;
    const SampleSet fine = hierarchical_resample(coarse, w, n_fine, 17);
    REQUIRE(fine.size() == std::size_t(20 + n_fine));
    CHECK(std::is_sorted(fine.ts.begin(), fine.ts.end()));
    std::vector<int> counts(20, 0);
    for (double t : fine.ts) counts[std::min(19, int(t))]++;
    // Every bin also holds its coarse midpoint.
    double chi2 = 0;
    const double expected = n_fine / 20.0;
    for (int c : counts) chi2 += (c - 1 - expected) * (c - 1 - expected) / expected;
    CHECK(chi2 < kChi2Df19P01);
  }

  TEST_CASE("concentrated weight dominates resampling") {
    const SampleSet coarse = sample_stratified(ray_z(0, 16), 16);
    std::vector<double> w(16, 0.0);
    w[9] = 1.0;
    const SampleSet fine = hierarchical_resample(coarse, w, 1000, 4);
    int inside = 0;
    for (double t : fine.ts) inside += (t >= 9 && t < 10);
    // Mass (1 + 0.01) / (1 + 16 * 0.01) of the fine draws, plus the coarse midpoint.
    CHECK(inside - 1 >= 800);
    CHECK(std::is_sorted(fine.ts.begin(), fine.ts.end()));
    CHECK_THROWS_WITH_AS(hierarchical_resample(coarse, std::vector<double>(16, 0.0), 8, 1, 0.0),
                         doctest::Contains("all-zero"), NumericalError);
  }

  TEST_CASE("resampled sets stay ordered for random weights") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const SampleSet coarse = sample_stratified(ray_z(1, 7), 12, std::uint64_t(trial));
      std::vector<double> w(12);
      for (auto& v : w) v = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng);
      const SampleSet fine = hierarchical_resample(coarse, w, 24, std::uint64_t(trial));
      CHECK(std::adjacent_find(fine.ts.begin(), fine.ts.end(), std::greater_equal<>()) == fine.ts.end());
      CHECK(fine.ts.front() >= 1.0);
      CHECK(fine.ts.back() < 7.0);
    }
  }

  TEST_CASE("render_ray on analytic fields") {
    RenderConfig cfg;
    cfg.n_coarse = 32;
    cfg.n_fine = 32;
    FieldParams empty = init_params({}, 8, 1);
    std::fill(empty.values.begin(), empty.values.end(), 0.0);
    empty.values[empty.layout.b_sigma.offset] = -800.0;
    const Ray down{Vec3(0.2, -0.1, 10), Vec3(0, 0, -1), 0.0, 20.0};
    CHECK(render_ray(empty, down, cfg).result.accumulated_alpha == 0.0);

    const FieldParams plane = sylva::test::opaque_plane_field(3.0);
    const RayRender rr = render_ray(plane, down, cfg);
    CHECK(rr.result.accumulated_alpha > 0.999);
    CHECK(std::abs(rr.result.depth - 7.0) <= 20.0 / 32);
    const auto surf = surface_distance(rr.result, rr.samples);
    REQUIRE(surf);
    CHECK(std::abs(*surf - 7.0) <= 20.0 / 32);

    cfg.seed = 5;
    const RayRender a = render_ray(plane, down, cfg), b = render_ray(plane, down, cfg);
    CHECK(a.samples.ts == b.samples.ts);
    CHECK(a.result.depth == b.result.depth);
  }

  TEST_CASE("surface distance rules") {
    RenderResult r;
    r.weights = {0.0, 0.0, 0.0};
    const SampleSet s = make_sample_set({1, 2, 3}, 0, 4);
    CHECK_FALSE(surface_distance(r, s));
    r.weights = {0.1, 0.4, 0.4};
    r.accumulated_alpha = 0.9;
    CHECK(*surface_distance(r, s) == 2.0);
    r.weights = {0.0, 0.0, 1.0};
    r.accumulated_alpha = 1.0;
    CHECK(*surface_distance(r, s) == 3.0);
  }

  TEST_CASE("batch renderer matches single-ray rendering") {
    const FieldParams p = init_params({}, 32, 4, Vec3::Zero(), 3.0);
    RenderConfig cfg;
    cfg.n_coarse = 16;
    cfg.n_fine = 16;
    cfg.seed = 2;
    cfg.chunk_rays = 3;
    Rng rng(1);
    std::vector<Ray> rays;
    for (int i = 0; i < 10; ++i) rays.push_back({Vec3(0, 0, -3), sylva::test::random_unit(rng), 0.5, 4.0});
    BatchRenderer br(cfg);
    const auto& out = br.render(p, rays, 7);
    CHECK(out.size() == rays.size());
    RenderConfig one = cfg;
    one.chunk_rays = 128;
    one.threads = 4;
    BatchRenderer br2(one);
    const auto& out2 = br2.render(p, rays, 7);
    for (std::size_t i = 0; i < rays.size(); ++i) {
      CHECK(out[i].samples.ts == out2[i].samples.ts);
      CHECK(out[i].result.color == out2[i].result.color);
    }
    const auto first = render_ray(p, rays[0], cfg);
    BatchRenderer br3(cfg);
    CHECK(br3.render(p, std::span(rays).first(1), 0).front().result.depth == first.result.depth);
  }

  TEST_CASE("per-ray backgrounds") {
    const FieldParams p = init_params({}, 16, 4);
    RenderConfig cfg;
    cfg.n_coarse = 8;
    cfg.n_fine = 0;
    std::vector<Ray> rays(2, Ray{Vec3::Zero(), Vec3::UnitX(), 0.0, 0.05});
    const std::vector<Vec3> bgs = {Vec3(1, 0, 0), Vec3(0, 0, 1)};
    BatchRenderer br(cfg);
    const auto out = br.render(p, rays, 0, false, bgs);
    const double a = out[0].result.accumulated_alpha;
    CHECK((out[0].result.color - out[1].result.color - (1 - a) * (bgs[0] - bgs[1])).norm() < 1e-12);
    CHECK_THROWS_AS(br.render(p, rays, 0, false, std::span(bgs).first(1)), ConfigError);
  }

  TEST_CASE("end-to-end gradient matches central differences") {
    FieldParams p = init_params(EncodingConfig{3, 2}, 16, 8, Vec3::Zero(), 2.0);
    Rng rng(31);
    for (auto& v : p.values) v += 0.05 * normal01(rng);
    RenderConfig cfg;
    cfg.n_coarse = 8;
    cfg.n_fine = 0;
    cfg.composite.background = Vec3(0.2, 0.4, 0.6);
    std::vector<Ray> rays;
    for (int i = 0; i < 3; ++i) rays.push_back({Vec3(0, 0, -2), sylva::test::random_unit(rng), 0.5, 3.5});
    std::vector<Vec3> dc;
    std::vector<double> dz;
    for (int i = 0; i < 3; ++i) {
      dc.emplace_back(normal01(rng), normal01(rng), normal01(rng));
      dz.push_back(normal01(rng));
    }
    auto f = [&](const FieldParams& q) {
      BatchRenderer br(cfg);
      const auto& out = br.render(q, rays);
      double s = 0;
      for (int i = 0; i < 3; ++i) s += dc[i].dot(out[i].result.color) + dz[i] * out[i].result.depth;
      return s;
    };
    BatchRenderer br(cfg);
    br.render(p, rays, 0, true);
    ParamGradients g(p.layout);
    br.backward(p, dc, dz, g);
    const double h = 1e-5;
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t k = rng() % p.values.size();
      FieldParams a = p, b = p;
      a.values[k] += h;
      b.values[k] -= h;
      const double fd = (f(a) - f(b)) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(g.values[k]), 1e-6});
      CHECK(std::abs(fd - g.values[k]) / scale <= 1e-4);
    }
  }

  TEST_CASE("render_view fills misses with the background") {
    const FieldParams plane = sylva::test::opaque_plane_field(0.0);
    RenderConfig cfg;
    cfg.n_coarse = 32;
    cfg.n_fine = 16;
    cfg.composite.background = Vec3(0, 0, 1);
    const CameraIntrinsics k = CameraIntrinsics::from_fov(8, 8, 90);
    const PoseSE3 pose = PoseSE3::look_at({0, 0, 5}, {0, 0, 0}, Vec3::UnitY());
    const Aabb bounds{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
    const RenderedView v = render_view(plane, k, pose, bounds, cfg);
    CHECK(std::isinf(v.depth.at(0, 0)));
    CHECK(v.color.at(0, 0) == Vec3(0, 0, 1));
    CHECK(std::abs(v.depth.at(4, 4) / std::sqrt(1 + 2 * std::pow(0.5 / 4, 2)) - 5.0) < 2.0 / 32 + 1e-9);
    CHECK(v.alpha.at(4, 4) > 0.99);
  }
}
