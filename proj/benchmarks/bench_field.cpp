// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "sylva/field.hpp"
#include "sylva/random.hpp"

namespace {

using namespace sylva;

struct Inputs {
  std::vector<Vec3> xs, ds;
};

Inputs random_inputs(std::size_t n) {
  Rng rng(3);
  Inputs in;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = uniform(rng, -1, 1), y = uniform(rng, -1, 1), z = uniform(rng, -1, 1);
    in.xs.emplace_back(x, y, z);
    in.ds.push_back(Vec3(x, y, 1.0).normalized());
  }
  return in;
}

void BM_FieldEvalBatch(benchmark::State& state) {
  const FieldParams p = init_params({}, int(state.range(0)), 1);
  const Inputs in = random_inputs(4096);
  const Precision precision = state.range(1) ? Precision::kF32 : Precision::kF64;
  for (auto _ : state) benchmark::DoNotOptimize(field_eval_batch(p, in.xs, in.ds, precision));
  state.SetItemsProcessed(state.iterations() * std::int64_t(in.xs.size()));
}
BENCHMARK(BM_FieldEvalBatch)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_FieldBackward(benchmark::State& state) {
  const FieldParams p = init_params({}, int(state.range(0)), 1);
  const Inputs in = random_inputs(4096);
  std::vector<double> d_sigma(in.xs.size(), 1.0);
  std::vector<Vec3> d_rgb(in.xs.size(), Vec3::Ones());
  for (auto _ : state) benchmark::DoNotOptimize(field_backward(p, in.xs, in.ds, d_sigma, d_rgb));
  state.SetItemsProcessed(state.iterations() * std::int64_t(in.xs.size()));
}
BENCHMARK(BM_FieldBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
