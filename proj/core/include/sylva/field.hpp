// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "sylva/geometry.hpp"

namespace sylva {

struct EncodingConfig {
  int n_freq_pos = 10;
  int n_freq_dir = 4;

  int pos_dim() const { return 3 + 6 * n_freq_pos; }
  int dir_dim() const { return 3 + 6 * n_freq_dir; }
};

/// [x, sin(2^k pi x), cos(2^k pi x)] for k = 0..n_freq-1; length 3 + 6 n_freq.
/// Octaves past the first use the double-angle recurrence, so this matches
/// the batched encoder bit for bit.
Eigen::VectorXd encode(const Vec3& x, int n_freq);

enum class Precision { kF64, kF32 };

/// Index ranges of every tensor inside the flat parameter vector.
struct FieldLayout {
  int pos_dim = 0;
  int dir_dim = 0;
  int hidden = 0;

  struct Tensor {
    std::size_t offset;
    int rows;
    int cols;
  };
  // Hidden layer 1, hidden layer 2, density head, color head. Weights are column-major.
  Tensor w1, b1, w2, b2, w_sigma, b_sigma, w_color, b_color;
  std::size_t size = 0;

  FieldLayout() = default;
  FieldLayout(const EncodingConfig& enc, int hidden_width);
  std::array<Tensor, 8> tensors() const { return {w1, b1, w2, b2, w_sigma, b_sigma, w_color, b_color}; }
  bool operator==(const FieldLayout& o) const {
    return pos_dim == o.pos_dim && dir_dim == o.dir_dim && hidden == o.hidden;
  }
};

/// Trainable weights of the radiance MLP. World positions are mapped to
/// (x - center) / scale before encoding.
struct FieldParams {
  EncodingConfig encoding;
  int hidden_width = 64;
  std::uint64_t seed = 0;
  Vec3 center = Vec3::Zero();
  double scale = 1.0;
  FieldLayout layout;
  std::vector<double> values;

  using ConstMap = Eigen::Map<const Eigen::MatrixXd>;
  using Map = Eigen::Map<Eigen::MatrixXd>;
  ConstMap view(const FieldLayout::Tensor& t) const { return {values.data() + t.offset, t.rows, t.cols}; }
  Map view(const FieldLayout::Tensor& t) { return {values.data() + t.offset, t.rows, t.cols}; }

  bool all_finite() const;
};

struct FieldOutput {
  double sigma = 0.0;
  Vec3 rgb = Vec3::Zero();
};

/// Same shape as the FieldParams it differentiates.
struct ParamGradients {
  FieldLayout layout;
  std::vector<double> values;

  ParamGradients() = default;
  explicit ParamGradients(const FieldLayout& l) : layout(l), values(l.size, 0.0) {}
  void set_zero() { std::fill(values.begin(), values.end(), 0.0); }
  ParamGradients& operator+=(const ParamGradients& o);
};

/// Xavier-uniform weights, zero biases; deterministic in `seed`.
FieldParams init_params(const EncodingConfig& cfg, int hidden_width, std::uint64_t seed,
                        const Vec3& center = Vec3::Zero(), double scale = 1.0);

/// Density from softplus of a position-only feature; color from a sigmoid
/// head that also sees the encoded direction.
FieldOutput field_eval(const FieldParams& params, const Vec3& x, const Vec3& d);

std::vector<FieldOutput> field_eval_batch(const FieldParams& params, std::span<const Vec3> xs,
                                          std::span<const Vec3> ds, Precision precision = Precision::kF64);

/// Gradients of sum_i (d_sigma_i * sigma_i + d_rgb_i . rgb_i) with respect to every parameter.
ParamGradients field_backward(const FieldParams& params, std::span<const Vec3> xs, std::span<const Vec3> ds,
                              std::span<const double> d_sigma, std::span<const Vec3> d_rgb);

/// Cached activations of one batched forward pass, reused by the backward pass.
class FieldTape {
 public:
  explicit FieldTape(Precision precision = Precision::kF64);
  ~FieldTape();
  FieldTape(FieldTape&&) noexcept;
  FieldTape& operator=(FieldTape&&) noexcept;

  /// Evaluates the batch and writes sigma into `sigma` and rgb into `rgb`
  /// (both resized to xs.size()).
  void forward(const FieldParams& params, std::span<const Vec3> xs, std::span<const Vec3> ds,
               std::vector<double>& sigma, std::vector<Vec3>& rgb);
  /// Accumulates (+=) parameter gradients for the last forward batch.
  void backward(const FieldParams& params, std::span<const double> d_sigma, std::span<const Vec3> d_rgb,
                ParamGradients& grads) const;
  std::size_t size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Binary checkpoint; byte layout in docs/formats.md.
void save_params(const FieldParams& params, const std::filesystem::path& path);
FieldParams load_params(const std::filesystem::path& path);

}  // namespace sylva
