// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "sylva/random.hpp"
#include "sylva/synth.hpp"

namespace {

using namespace sylva;

const SceneDescription& forest() {
  static const SceneDescription scene =
      generate_forest(7, Rect2{Vec2(-20, -20), Vec2(20, 20)}, 30, 4.0, {0.2, 0.5}, {8, 14});
  return scene;
}

Vec3 free_origin() {
  Vec3 o(0.5, 0.5, 1.5);
  while (inside_solid(forest(), o)) o.x() += 0.7;
  return o;
}

void BM_TraceRay(benchmark::State& state) {
  const SceneDescription& scene = forest();
  const Vec3 origin = free_origin();
  Rng rng(1);
  std::size_t hits = 0;
  for (auto _ : state) {
    const Vec3 d = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -0.6, 0.3)).normalized();
    hits += trace_ray_exact(scene, Ray{origin, d, 0.0, 60.0}).has_value();
  }
  benchmark::DoNotOptimize(hits);
}
BENCHMARK(BM_TraceRay);

void BM_SimulateAls(benchmark::State& state) {
  AlsConfig cfg;
  cfg.density = double(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_als(forest(), cfg).cloud.size());
}
BENCHMARK(BM_SimulateAls)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SimulateTls(benchmark::State& state) {
  TlsConfig cfg;
  cfg.origin = free_origin();
  cfg.angular_res_deg = 0.5;
  cfg.max_range = 30.0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_tls(forest(), cfg).cloud.size());
}
BENCHMARK(BM_SimulateTls)->Unit(benchmark::kMillisecond);

}  // namespace
