// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <numeric>

#include "sylva/error.hpp"
#include "sylva/field.hpp"
#include "sylva/random.hpp"
#include "test_support.hpp"

using namespace sylva;
using sylva::test::random_unit;

namespace {

struct Batch {
  std::vector<Vec3> xs, ds;
  std::vector<double> d_sigma;
  std::vector<Vec3> d_rgb;
};

Batch random_batch(Rng& rng, int n) {
  Batch b;
  for (int i = 0; i < n; ++i) {
    b.xs.emplace_back(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    b.ds.push_back(random_unit(rng));
    b.d_sigma.push_back(normal01(rng));
    b.d_rgb.emplace_back(normal01(rng), normal01(rng), normal01(rng));
  }
  return b;
}

double objective(const FieldParams& p, const Batch& b) {
  const auto out = field_eval_batch(p, b.xs, b.ds);
  double s = 0;
  for (std::size_t i = 0; i < out.size(); ++i) s += b.d_sigma[i] * out[i].sigma + b.d_rgb[i].dot(out[i].rgb);
  return s;
}

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("encoding examples") {
    const Vec3 x(0.3, -0.7, 2.0);
    const Eigen::VectorXd e0 = encode(x, 0);
    REQUIRE(e0.size() == 3);
    CHECK((e0 - x).norm() == 0.0);

    const Eigen::VectorXd z = encode(Vec3::Zero(), 3);
    REQUIRE(z.size() == 21);
    for (int k = 0; k < 3; ++k) {
      for (int a = 0; a < 3; ++a) {
        CHECK(z[3 + 6 * k + a] == 0.0);
        CHECK(z[3 + 6 * k + 3 + a] == 1.0);
      }
    }

    const Eigen::VectorXd h = encode(Vec3(0.5, 0, 0), 1);
    CHECK(h[3] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(h[6]) < 1e-15);
  }

  TEST_CASE("encoding matches direct trigonometry") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      const Vec3 x(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
      const Eigen::VectorXd e = encode(x, 10);
      for (int k = 0; k < 10; ++k) {
        for (int a = 0; a < 3; ++a) {
          const double w = std::ldexp(M_PI, k) * x[a];
          CHECK(std::abs(e[3 + 6 * k + a] - std::sin(w)) < 1e-9);
          CHECK(std::abs(e[3 + 6 * k + 3 + a] - std::cos(w)) < 1e-9);
        }
      }
    }
  }

  TEST_CASE("init is deterministic and Xavier bounded") {
    const FieldParams a = init_params({}, 64, 42), b = init_params({}, 64, 42), c = init_params({}, 64, 43);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    const FieldLayout& l = a.layout;
    CHECK(l.size == a.values.size());
    CHECK(l.w1.rows == 64);
    CHECK(l.w1.cols == 63);
    CHECK(l.w_color.cols == 64 + 27);
    for (const auto& t : l.tensors()) {
      const auto m = a.view(t);
      if (t.cols == 1) {
        CHECK(m.cwiseAbs().maxCoeff() == 0.0);
      } else {
        CHECK(m.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (t.rows + t.cols)));
      }
    }
  }

  TEST_CASE("outputs at init are in range") {
    const FieldParams p = init_params({}, 64, 7);
    Rng rng(2);
    const Batch b = random_batch(rng, 1000);
    for (const auto& o : field_eval_batch(p, b.xs, b.ds)) {
      CHECK(o.sigma >= 0.0);
      CHECK(o.rgb.minCoeff() >= 0.0);
      CHECK(o.rgb.maxCoeff() <= 1.0);
    }
  }

  TEST_CASE("zero weights give activation midpoints") {
    FieldParams p = init_params({}, 16, 1);
    std::fill(p.values.begin(), p.values.end(), 0.0);
    const FieldOutput o = field_eval(p, Vec3(1, 2, 3), Vec3::UnitX());
    CHECK(o.sigma == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK((o.rgb - Vec3::Constant(0.5)).norm() == 0.0);
  }

  TEST_CASE("density ignores direction") {
    const FieldParams p = init_params({}, 64, 9);
    const Vec3 x(0.1, 0.2, -0.3);
    const FieldOutput a = field_eval(p, x, Vec3::UnitX()), b = field_eval(p, x, Vec3(0, -0.6, 0.8));
    CHECK(a.sigma == b.sigma);
    CHECK(a.rgb != b.rgb);
    const FieldOutput again = field_eval(p, x, Vec3::UnitX());
    CHECK(again.sigma == a.sigma);
    CHECK(again.rgb == a.rgb);
  }

  TEST_CASE("batch agrees with scalar calls") {
    const FieldParams p = init_params({}, 64, 3);
    Rng rng(5);
    const Batch b = random_batch(rng, 1024);
    const auto out = field_eval_batch(p, b.xs, b.ds);
    for (std::size_t i = 0; i < b.xs.size(); ++i) {
      const FieldOutput s = field_eval(p, b.xs[i], b.ds[i]);
      CHECK(std::abs(s.sigma - out[i].sigma) <= 1e-12);
      CHECK((s.rgb - out[i].rgb).cwiseAbs().maxCoeff() <= 1e-12);
    }
    std::vector<Vec3> rx(b.xs.rbegin(), b.xs.rend()), rd(b.ds.rbegin(), b.ds.rend());
    const auto rev = field_eval_batch(p, rx, rd);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(rev[out.size() - 1 - i].sigma == out[i].sigma);
      CHECK(rev[out.size() - 1 - i].rgb == out[i].rgb);
    }
  }

  TEST_CASE("single precision tracks double precision") {
    const FieldParams p = init_params({}, 64, 3, Vec3(1, 1, 1), 4.0);
    Rng rng(6);
    const Batch b = random_batch(rng, 256);
    const auto d = field_eval_batch(p, b.xs, b.ds, Precision::kF64);
    const auto f = field_eval_batch(p, b.xs, b.ds, Precision::kF32);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(std::abs(d[i].sigma - f[i].sigma) < 1e-4);
      CHECK((d[i].rgb - f[i].rgb).cwiseAbs().maxCoeff() < 1e-4);
    }
  }

  TEST_CASE("input checks") {
    const FieldParams p = init_params({}, 8, 1);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(field_eval(p, Vec3(nan, 0, 0), Vec3::UnitZ()), NumericalError);
    std::vector<Vec3> xs(2, Vec3::Zero()), ds(1, Vec3::UnitZ());
    CHECK_THROWS_AS(field_eval_batch(p, xs, ds), ConfigError);
  }

  TEST_CASE("zero upstream gives zero gradient") {
    const FieldParams p = init_params({}, 32, 4);
    Rng rng(7);
    Batch b = random_batch(rng, 16);
    std::fill(b.d_sigma.begin(), b.d_sigma.end(), 0.0);
    std::fill(b.d_rgb.begin(), b.d_rgb.end(), Vec3::Zero());
    const ParamGradients g = field_backward(p, b.xs, b.ds, b.d_sigma, b.d_rgb);
    CHECK(std::all_of(g.values.begin(), g.values.end(), [](double v) { return v == 0.0; }));
  }

  TEST_CASE("backward matches central differences") {
    FieldParams p = init_params(EncodingConfig{4, 2}, 16, 11);
    Rng rng(12);
    // Nonzero biases so every ReLU sees both signs.
    for (auto& v : p.values) v += 0.05 * normal01(rng);
    const Batch b = random_batch(rng, 8);
    const ParamGradients g = field_backward(p, b.xs, b.ds, b.d_sigma, b.d_rgb);
    const double h = 1e-4;
    int checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t k = rng() % p.values.size();
      FieldParams q = p;
      q.values[k] = p.values[k] + h;
      const double up = objective(q, b);
      q.values[k] = p.values[k] - h;
      const double down = objective(q, b);
      const double fd = (up - down) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(g.values[k]), 1e-6});
      CHECK(std::abs(fd - g.values[k]) / scale <= 1e-4);
      ++checked;
    }
    CHECK(checked == 50);
  }

  TEST_CASE("gradient of a sum is the sum of gradients") {
    const FieldParams p = init_params({}, 32, 13);
    Rng rng(14);
    const Batch b = random_batch(rng, 12);
    const ParamGradients all = field_backward(p, b.xs, b.ds, b.d_sigma, b.d_rgb);
    ParamGradients sum(p.layout);
    for (std::size_t i = 0; i < b.xs.size(); ++i) {
      sum += field_backward(p, std::span(&b.xs[i], 1), std::span(&b.ds[i], 1), std::span(&b.d_sigma[i], 1),
                            std::span(&b.d_rgb[i], 1));
    }
    for (std::size_t k = 0; k < all.values.size(); ++k) CHECK(std::abs(all.values[k] - sum.values[k]) <= 1e-10);
  }

  TEST_CASE("tape accumulates") {
    const FieldParams p = init_params({}, 16, 2);
    Rng rng(3);
    const Batch b = random_batch(rng, 5);
    FieldTape tape;
    std::vector<double> sigma;
    std::vector<Vec3> rgb;
    tape.forward(p, b.xs, b.ds, sigma, rgb);
    CHECK(tape.size() == 5);
    ParamGradients g(p.layout);
    tape.backward(p, b.d_sigma, b.d_rgb, g);
    tape.backward(p, b.d_sigma, b.d_rgb, g);
    const ParamGradients once = field_backward(p, b.xs, b.ds, b.d_sigma, b.d_rgb);
    for (std::size_t k = 0; k < g.values.size(); ++k) CHECK(g.values[k] == doctest::Approx(2 * once.values[k]));
    std::vector<double> short_sigma(4, 0.0);
    CHECK_THROWS_AS(tape.backward(p, short_sigma, b.d_rgb, g), ConfigError);
  }

  TEST_CASE("checkpoint round trip") {
    const auto dir = sylva::test::tmp_dir("params");
    const FieldParams p = init_params(EncodingConfig{6, 3}, 24, 99, Vec3(1, -2, 3), 7.5);
    save_params(p, dir / "p.bin");
    const FieldParams q = load_params(dir / "p.bin");
    CHECK(q.values == p.values);
    CHECK(q.hidden_width == 24);
    CHECK(q.encoding.n_freq_pos == 6);
    CHECK(q.encoding.n_freq_dir == 3);
    CHECK(q.seed == 99);
    CHECK(q.center == p.center);
    CHECK(q.scale == 7.5);
    std::ofstream(dir / "bad.bin") << "NOTAFILE";
    CHECK_THROWS_AS(load_params(dir / "bad.bin"), DataError);
    const std::string bytes = sylva::test::file_bytes(dir / "p.bin");
    std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_params(dir / "short.bin"), DataError);
  }
}
