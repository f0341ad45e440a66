// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sylva/field.hpp"
#include "sylva/geometry.hpp"
#include "sylva/image.hpp"

namespace sylva {

/// Sample distances along one ray. deltas[i] = ts[i+1] - ts[i]; the last
/// delta runs to t_far.
struct SampleSet {
  std::vector<double> ts;
  std::vector<double> deltas;
  double t_near = 0.0;
  double t_far = 0.0;

  std::size_t size() const { return ts.size(); }
};

/// Builds a SampleSet from ascending distances. Throws ConfigError when ts is
/// not strictly ascending inside [t_near, t_far).
SampleSet make_sample_set(std::vector<double> ts, double t_near, double t_far);

struct RenderResult {
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  double depth_std = 0.0;
  std::vector<double> weights;
  double accumulated_alpha = 0.0;
  /// accumulated_alpha below 0.5.
  bool sky = false;
};

struct CompositeOptions {
  /// When set, color becomes sum(w c) + (1 - sum w) * background.
  std::optional<Vec3> background;
  /// Divide depth and depth variance by sum(w). Off by default.
  bool renormalize = false;
};

/// One sample per bin of n equal bins over [t_near, t_far]; bin midpoints
/// without a seed, uniform jitter inside each bin with one.
SampleSet sample_stratified(const Ray& ray, int n, std::optional<std::uint64_t> jitter_seed = std::nullopt);

/// Transmittance-weighted compositing of color, depth and depth spread.
RenderResult composite(std::span<const double> sigmas, std::span<const Vec3> colors, const SampleSet& samples,
                       const CompositeOptions& opts = {});

/// Reverse pass of composite for upstream gradients on color and (raw, not
/// renormalized) depth. Writes dL/dsigma_i and dL/dc_i.
void composite_backward(std::span<const double> sigmas, std::span<const Vec3> colors, const SampleSet& samples,
                        const RenderResult& result, const CompositeOptions& opts, const Vec3& d_color,
                        double d_depth, std::span<double> d_sigma, std::span<Vec3> d_colors);

/// Inverse-CDF draws from the piecewise-constant density with mass
/// (w_i + floor) on the bin around coarse sample i, merged with the coarse
/// samples. Without a seed the draws sit at stratum midpoints.
SampleSet hierarchical_resample(const SampleSet& coarse, std::span<const double> coarse_weights, int n_fine,
                                std::optional<std::uint64_t> seed, double floor = 0.01);

struct RenderConfig {
  int n_coarse = 64;
  int n_fine = 64;
  /// Jitter and fine-sample seed; deterministic midpoints when empty.
  std::optional<std::uint64_t> seed;
  double resample_floor = 0.01;
  CompositeOptions composite;
  Precision precision = Precision::kF64;
  int threads = 1;
  /// Rays per work item; fixes the gradient reduction order.
  int chunk_rays = 128;
};

struct RayRender {
  RenderResult result;
  SampleSet samples;
};

/// Coarse pass, resample, then composite over the merged samples. One
/// network serves both passes.
RayRender render_ray(const FieldParams& params, const Ray& ray, const RenderConfig& cfg);

/// Returns t at the largest weight (ties toward smaller t), or nothing when
/// accumulated alpha is under the threshold.
std::optional<double> surface_distance(const RenderResult& result, const SampleSet& samples,
                                       double alpha_threshold = 0.5);

/// Renders many rays with batched field evaluation and, optionally, keeps
/// what the backward pass needs.
class BatchRenderer {
 public:
  explicit BatchRenderer(RenderConfig cfg);
  ~BatchRenderer();
  BatchRenderer(BatchRenderer&&) noexcept;

  /// `stream` decorrelates jitter between calls that share cfg.seed
  /// (for example, the training iteration). A non-empty `backgrounds` gives
  /// each ray its own background color in place of cfg.composite.background.
  const std::vector<RayRender>& render(const FieldParams& params, std::span<const Ray> rays,
                                       std::uint64_t stream = 0, bool keep_tape = false,
                                       std::span<const Vec3> backgrounds = {});

  /// Accumulates dL/dTheta for the last render(..., keep_tape = true).
  void backward(const FieldParams& params, std::span<const Vec3> d_color, std::span<const double> d_depth,
                ParamGradients& grads);

  const RenderConfig& config() const { return cfg_; }

 private:
  struct Chunk;
  RenderConfig cfg_;
  std::vector<Chunk> chunks_;
  std::vector<RayRender> results_;
  std::vector<Vec3> backgrounds_;

  CompositeOptions options_for(std::size_t ray) const;
};

struct RenderedView {
  Image color;
  Raster depth;
  Raster depth_std;
  Raster alpha;
};

/// Renders every pixel of a view; pixels whose ray misses `bounds` get the
/// background color and infinite depth.
RenderedView render_view(const FieldParams& params, const CameraIntrinsics& intr, const PoseSE3& pose,
                         const Aabb& bounds, const RenderConfig& cfg);

}  // namespace sylva
