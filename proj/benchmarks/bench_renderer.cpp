// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "sylva/field.hpp"
#include "sylva/random.hpp"
#include "sylva/renderer.hpp"

namespace {

using namespace sylva;

void BM_Composite(benchmark::State& state) {
  const int n = int(state.range(0));
  const SampleSet s = sample_stratified(Ray{Vec3::Zero(), Vec3::UnitZ(), 0.5, 20.0}, n, 1);
  Rng rng(2);
  std::vector<double> sigma(n);
  std::vector<Vec3> color(n);
  for (int i = 0; i < n; ++i) {
    sigma[i] = uniform(rng, 0, 2);
    color[i] = Vec3::Constant(uniform01(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(composite(sigma, color, s));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Composite)->Arg(64)->Arg(128)->Arg(1024);

void BM_HierarchicalResample(benchmark::State& state) {
  const SampleSet coarse = sample_stratified(Ray{Vec3::Zero(), Vec3::UnitZ(), 0.5, 20.0}, 64, 1);
  Rng rng(3);
  std::vector<double> w(64);
  for (auto& v : w) v = uniform01(rng);
  for (auto _ : state) benchmark::DoNotOptimize(hierarchical_resample(coarse, w, int(state.range(0)), 4));
}
BENCHMARK(BM_HierarchicalResample)->Arg(64)->Arg(128);

void BM_BatchRender(benchmark::State& state) {
  const FieldParams p = init_params({}, 64, 1, Vec3::Zero(), 10.0);
  RenderConfig cfg;
  cfg.n_coarse = 32;
  cfg.n_fine = 32;
  cfg.seed = 5;
  cfg.precision = state.range(0) ? Precision::kF32 : Precision::kF64;
  Rng rng(4);
  std::vector<Ray> rays;
  for (int i = 0; i < 256; ++i) {
    const Vec3 d = Vec3(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2), -1.0).normalized();
    rays.push_back({Vec3(0, 0, 30), d, 20.0, 40.0});
  }
  BatchRenderer renderer(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(renderer.render(p, rays).size());
  state.SetItemsProcessed(state.iterations() * std::int64_t(rays.size()));
}
BENCHMARK(BM_BatchRender)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
