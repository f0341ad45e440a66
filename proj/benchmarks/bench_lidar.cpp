// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cmath>

#include "sylva/lidar.hpp"
#include "sylva/random.hpp"

namespace {

using namespace sylva;

PointCloud terrain(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = uniform(rng, -15, 15), y = uniform(rng, -15, 15);
    c.points.emplace_back(x, y, 0.6 * std::sin(0.4 * x) * std::cos(0.3 * y) + 0.02 * x * y / 15);
  }
  for (int k = 0; k < 6; ++k) {
    const double px = uniform(rng, -12, 12), py = uniform(rng, -12, 12);
    for (int i = 0; i < 400; ++i) {
      const double t = uniform(rng, 0, 2 * M_PI);
      c.points.emplace_back(px + 0.3 * std::cos(t), py + 0.3 * std::sin(t), uniform(rng, 0, 3));
    }
  }
  return c;
}

void BM_SpatialGridNearest(benchmark::State& state) {
  const PointCloud c = terrain(std::size_t(state.range(0)), 1);
  const SpatialGrid grid(c.points, 0.5);
  Rng rng(2);
  std::size_t found = 0;
  for (auto _ : state) {
    const Vec3 q(uniform(rng, -15, 15), uniform(rng, -15, 15), uniform(rng, -1, 2));
    found += grid.nearest(q, 1.0).has_value();
  }
  benchmark::DoNotOptimize(found);
}
BENCHMARK(BM_SpatialGridNearest)->Arg(10000)->Arg(100000);

void BM_Icp(benchmark::State& state) {
  const PointCloud target = terrain(20000, 3);
  const PoseSE3 move = PoseSE3::from_axis_angle(Vec3(0.2, -0.4, 1.0), 0.04, Vec3(0.4, -0.3, 0.2));
  const PointCloud source = transform_cloud(terrain(20000, 3), move);
  IcpConfig cfg;
  cfg.metric = state.range(0) ? IcpMetric::kPointToPlane : IcpMetric::kPointToPoint;
  for (auto _ : state) benchmark::DoNotOptimize(coregister_icp(source, target, PoseSE3::identity(), cfg));
}
BENCHMARK(BM_Icp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
