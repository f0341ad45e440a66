// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "sylva/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sylva/error.hpp"
#include "sylva/parallel.hpp"
#include "sylva/random.hpp"

namespace sylva {

SampleSet make_sample_set(std::vector<double> ts, double t_near, double t_far) {
  if (!(t_near < t_far)) throw ConfigError("sample set: t_near must be below t_far");
  SampleSet s;
  s.t_near = t_near;
  s.t_far = t_far;
  s.deltas.resize(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double next = i + 1 < ts.size() ? ts[i + 1] : t_far;
    if (ts[i] < t_near || !(next > ts[i])) throw ConfigError("sample set: distances must ascend strictly inside bounds");
    s.deltas[i] = next - ts[i];
  }
  s.ts = std::move(ts);
  return s;
}

SampleSet sample_stratified(const Ray& ray, int n, std::optional<std::uint64_t> jitter_seed) {
  if (n < 2) throw ConfigError("sample_stratified: need at least 2 samples");
  if (!(ray.t_near < ray.t_far) || !std::isfinite(ray.t_far)) {
    throw ConfigError("sample_stratified: ray needs finite bounds with t_near < t_far");
  }
  const double width = (ray.t_far - ray.t_near) / n;
  std::vector<double> ts(static_cast<std::size_t>(n));
  if (jitter_seed) {
    Rng rng(*jitter_seed);
    for (int i = 0; i < n; ++i) ts[i] = ray.t_near + (i + uniform01(rng)) * width;
  } else {
    for (int i = 0; i < n; ++i) ts[i] = ray.t_near + (i + 0.5) * width;
  }
  // Jitter can round a sample onto its neighbour in degenerate float cases.
  for (int i = 1; i < n; ++i) ts[i] = std::max(ts[i], std::nextafter(ts[i - 1], ray.t_far));
  return make_sample_set(std::move(ts), ray.t_near, ray.t_far);
}

RenderResult composite(std::span<const double> sigmas, std::span<const Vec3> colors, const SampleSet& samples,
                       const CompositeOptions& opts) {
  const std::size_t n = samples.size();
  if (sigmas.size() != n || colors.size() != n) throw ConfigError("composite: length mismatch");
  RenderResult r;
  r.weights.resize(n);
  double optical_depth = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sigmas[i] >= 0.0)) throw ConfigError("composite: negative or NaN density");
    const double a = sigmas[i] * samples.deltas[i];
    const double w = std::exp(-optical_depth) * -std::expm1(-a);
    optical_depth += a;
    r.weights[i] = w;
    r.color += w * colors[i];
    r.depth += w * samples.ts[i];
    acc += w;
  }
  r.accumulated_alpha = acc;
  const double norm = (opts.renormalize && acc > 0.0) ? 1.0 / acc : 1.0;
  r.depth *= norm;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = samples.ts[i] - r.depth;
    var += r.weights[i] * dt * dt;
  }
  r.depth_std = std::sqrt(std::max(0.0, var * norm));
  if (opts.background) r.color += (1.0 - acc) * *opts.background;
  r.sky = acc < 0.5;
  return r;
}

void composite_backward(std::span<const double> sigmas, std::span<const Vec3> colors, const SampleSet& samples,
                        const RenderResult& result, const CompositeOptions& opts, const Vec3& d_color,
                        double d_depth, std::span<double> d_sigma, std::span<Vec3> d_colors) {
  const std::size_t n = samples.size();
  if (sigmas.size() != n || colors.size() != n || d_sigma.size() != n || d_colors.size() != n) {
    throw ConfigError("composite_backward: length mismatch");
  }
  const Vec3 bg = opts.background.value_or(Vec3::Zero());
  // g_k: derivative of the loss with respect to w_k.
  // dL/dsigma_i = delta_i * (T_{i+1} g_i - sum_{k>i} w_k g_k)
  std::vector<double> optical(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) optical[k + 1] = optical[k] + sigmas[k] * samples.deltas[k];
  double suffix = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double g = d_color.dot(colors[i] - bg) + d_depth * samples.ts[i];
    d_sigma[i] = samples.deltas[i] * (std::exp(-optical[i + 1]) * g - suffix);
    d_colors[i] = result.weights[i] * d_color;
    suffix += result.weights[i] * g;
  }
}

SampleSet hierarchical_resample(const SampleSet& coarse, std::span<const double> coarse_weights, int n_fine,
                                std::optional<std::uint64_t> seed, double floor) {
  const std::size_t n = coarse.size();
  if (coarse_weights.size() != n) throw ConfigError("hierarchical_resample: weight count mismatch");
  if (n == 0) throw ConfigError("hierarchical_resample: empty coarse set");
  if (n_fine < 0) throw ConfigError("hierarchical_resample: n_fine must be >= 0");
  std::vector<double> edges(n + 1);
  edges[0] = coarse.t_near;
  edges[n] = coarse.t_far;
  for (std::size_t i = 1; i < n; ++i) edges[i] = 0.5 * (coarse.ts[i - 1] + coarse.ts[i]);
  std::vector<double> cdf(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(coarse_weights[i] >= 0.0)) throw ConfigError("hierarchical_resample: negative weight");
    cdf[i + 1] = cdf[i] + coarse_weights[i] + floor;
  }
  const double total = cdf[n];
  if (!(total > 0.0)) throw NumericalError("hierarchical_resample: all-zero weights with zero floor");

  std::vector<double> ts = coarse.ts;
  ts.reserve(n + std::size_t(n_fine));
  Rng rng(seed.value_or(0));
  for (int k = 0; k < n_fine; ++k) {
    const double jitter = seed ? uniform01(rng) : 0.5;
    const double u = (k + jitter) / n_fine * total;
    std::size_t bin = std::size_t(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    bin = std::clamp<std::size_t>(bin, 1, n) - 1;
    const double mass = cdf[bin + 1] - cdf[bin];
    const double frac = mass > 0.0 ? std::clamp((u - cdf[bin]) / mass, 0.0, 1.0) : 0.5;
    const double t = edges[bin] + frac * (edges[bin + 1] - edges[bin]);
    if (t >= coarse.t_near && t < coarse.t_far) ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return make_sample_set(std::move(ts), coarse.t_near, coarse.t_far);
}

std::optional<double> surface_distance(const RenderResult& result, const SampleSet& samples,
                                       double alpha_threshold) {
  if (result.weights.empty()) throw ConfigError("surface_distance: empty weights");
  if (result.accumulated_alpha < alpha_threshold) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.weights.size(); ++i) {
    if (result.weights[i] > result.weights[best]) best = i;
  }
  return samples.ts[best];
}

// ---------------------------------------------------------------------------

struct BatchRenderer::Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  FieldTape tape;
  std::vector<std::size_t> offsets;  // first merged sample of each ray, plus total
  std::vector<double> sigma;
  std::vector<Vec3> rgb;

  explicit Chunk(Precision p) : tape(p) {}
};

BatchRenderer::BatchRenderer(RenderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.n_coarse < 2) throw ConfigError("render config: n_coarse must be >= 2");
  if (cfg_.n_fine < 0) throw ConfigError("render config: n_fine must be >= 0");
  if (cfg_.chunk_rays < 1) throw ConfigError("render config: chunk_rays must be >= 1");
}
BatchRenderer::~BatchRenderer() = default;
BatchRenderer::BatchRenderer(BatchRenderer&&) noexcept = default;

CompositeOptions BatchRenderer::options_for(std::size_t ray) const {
  CompositeOptions o = cfg_.composite;
  if (!backgrounds_.empty()) o.background = backgrounds_[ray];
  return o;
}

const std::vector<RayRender>& BatchRenderer::render(const FieldParams& params, std::span<const Ray> rays,
                                                    std::uint64_t stream, bool keep_tape,
                                                    std::span<const Vec3> backgrounds) {
  const std::size_t n_rays = rays.size();
  if (!backgrounds.empty() && backgrounds.size() != n_rays) {
    throw ConfigError("batch render: one background per ray required");
  }
  backgrounds_.assign(backgrounds.begin(), backgrounds.end());
  const std::size_t chunk = std::size_t(cfg_.chunk_rays);
  const std::size_t n_chunks = (n_rays + chunk - 1) / chunk;
  results_.assign(n_rays, {});
  chunks_.clear();
  chunks_.reserve(n_chunks);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    chunks_.emplace_back(cfg_.precision);
    chunks_.back().begin = c * chunk;
    chunks_.back().end = std::min(n_rays, (c + 1) * chunk);
  }

  parallel_for(n_chunks, cfg_.threads, [&](std::size_t c) {
    Chunk& ch = chunks_[c];
    std::vector<Vec3> xs, ds;
    std::vector<SampleSet> sets;
    sets.reserve(ch.end - ch.begin);
    for (std::size_t r = ch.begin; r < ch.end; ++r) {
      std::optional<std::uint64_t> jitter;
      if (cfg_.seed) jitter = mix_seed(*cfg_.seed, stream, 2 * r);
      sets.push_back(sample_stratified(rays[r], cfg_.n_coarse, jitter));
    }
    auto gather = [&] {
      xs.clear();
      ds.clear();
      ch.offsets.assign(1, 0);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        const Ray& ray = rays[ch.begin + k];
        for (double t : sets[k].ts) {
          xs.push_back(ray.at(t));
          ds.push_back(ray.direction);
        }
        ch.offsets.push_back(xs.size());
      }
    };
    gather();
    if (cfg_.n_fine > 0) {
      FieldTape coarse_tape(cfg_.precision);
      std::vector<double> sigma;
      std::vector<Vec3> rgb;
      coarse_tape.forward(params, xs, ds, sigma, rgb);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        const std::size_t o = ch.offsets[k], m = ch.offsets[k + 1] - o;
        const RenderResult coarse = composite(std::span(sigma).subspan(o, m), std::span(rgb).subspan(o, m),
                                              sets[k], cfg_.composite);
        std::optional<std::uint64_t> fine_seed;
        if (cfg_.seed) fine_seed = mix_seed(*cfg_.seed, stream, 2 * (ch.begin + k) + 1);
        sets[k] = hierarchical_resample(sets[k], coarse.weights, cfg_.n_fine, fine_seed, cfg_.resample_floor);
      }
      gather();
    }
    ch.tape.forward(params, xs, ds, ch.sigma, ch.rgb);
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const std::size_t o = ch.offsets[k], m = ch.offsets[k + 1] - o;
      RayRender& out = results_[ch.begin + k];
      out.result = composite(std::span(ch.sigma).subspan(o, m), std::span(ch.rgb).subspan(o, m), sets[k],
                             options_for(ch.begin + k));
      out.samples = std::move(sets[k]);
    }
    if (!keep_tape) {
      ch.tape = FieldTape(cfg_.precision);
      ch.sigma.clear();
      ch.rgb.clear();
    }
  });
  if (!keep_tape) chunks_.clear();
  return results_;
}

void BatchRenderer::backward(const FieldParams& params, std::span<const Vec3> d_color,
                             std::span<const double> d_depth, ParamGradients& grads) {
  if (d_color.size() != results_.size() || d_depth.size() != results_.size()) {
    throw ConfigError("batch backward: upstream size does not match rendered rays");
  }
  if (chunks_.empty() && !results_.empty()) throw ConfigError("batch backward: render was not taped");
  std::vector<ParamGradients> partial(chunks_.size(), ParamGradients(params.layout));
  parallel_for(chunks_.size(), cfg_.threads, [&](std::size_t c) {
    const Chunk& ch = chunks_[c];
    const std::size_t total = ch.offsets.back();
    std::vector<double> d_sigma(total);
    std::vector<Vec3> d_rgb(total);
    for (std::size_t k = 0; k + 1 < ch.offsets.size(); ++k) {
      const std::size_t r = ch.begin + k;
      const std::size_t o = ch.offsets[k], m = ch.offsets[k + 1] - o;
      composite_backward(std::span(ch.sigma).subspan(o, m), std::span(ch.rgb).subspan(o, m), results_[r].samples,
                         results_[r].result, options_for(r), d_color[r], d_depth[r],
                         std::span(d_sigma).subspan(o, m), std::span(d_rgb).subspan(o, m));
    }
    ch.tape.backward(params, d_sigma, d_rgb, partial[c]);
  });
  // Fixed-order reduction: identical sums for any thread count.
  for (const auto& p : partial) grads += p;
}

RayRender render_ray(const FieldParams& params, const Ray& ray, const RenderConfig& cfg) {
  BatchRenderer renderer(cfg);
  return renderer.render(params, std::span<const Ray>(&ray, 1)).front();
}

RenderedView render_view(const FieldParams& params, const CameraIntrinsics& intr, const PoseSE3& pose,
                         const Aabb& bounds, const RenderConfig& cfg) {
  intr.validate();
  RenderedView v{Image(intr.width, intr.height), Raster(intr.width, intr.height),
                 Raster(intr.width, intr.height), Raster(intr.width, intr.height)};
  std::vector<Ray> rays;
  std::vector<std::size_t> index;
  const Vec3 bg = cfg.composite.background.value_or(Vec3::Zero());
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      const auto ray = ray_in_bounds(intr, pose, PixelCoord::center_of(x, y), bounds);
      if (ray) {
        rays.push_back(*ray);
        index.push_back(std::size_t(y) * intr.width + x);
      } else {
        v.color.at(x, y) = bg;
        v.depth.at(x, y) = std::numeric_limits<double>::infinity();
      }
    }
  }
  BatchRenderer renderer(cfg);
  const auto& out = renderer.render(params, rays);
  for (std::size_t i = 0; i < rays.size(); ++i) {
    const RenderResult& r = out[i].result;
    v.color.pixels[index[i]] = r.color;
    v.depth.values[index[i]] = r.depth;
    v.depth_std.values[index[i]] = r.depth_std;
    v.alpha.values[index[i]] = r.accumulated_alpha;
  }
  return v;
}

}  // namespace sylva
