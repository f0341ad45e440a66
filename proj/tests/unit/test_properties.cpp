// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "invariants.hpp"

using namespace sylva;

namespace {

void expect(const invariants::Outcome& o) {
  INFO(o.first_failure);
  CHECK(o.cases >= 100);
  CHECK(o.failures == 0);
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("renderer weights and transmittance") { expect(invariants::renderer_weights(500, 1)); }
  TEST_CASE("compositing oracle") { expect(invariants::compositing_oracle(100, 2)); }
  TEST_CASE("field ranges and direction independence") { expect(invariants::field_ranges(200, 3)); }
  TEST_CASE("icp residual monotonicity") { expect(invariants::icp_monotone(100, 4)); }
  TEST_CASE("detection permutation invariance and idempotence") { expect(invariants::detection_invariance(150, 5)); }
  TEST_CASE("geometry axioms") { expect(invariants::geometry_axioms(100, 6)); }
}
