// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "sylva/random.hpp"

#include <cmath>

namespace sylva {

std::uint64_t poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  if (mean > 64.0) {
    const double x = std::round(mean + std::sqrt(mean) * normal01(rng));
    return x < 0.0 ? 0 : static_cast<std::uint64_t>(x);
  }
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double p = uniform01(rng);
  while (p > limit) {
    ++k;
    p *= uniform01(rng);
  }
  return k;
}

}  // namespace sylva
