// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "sylva/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>

#include "byte_io.hpp"
#include "sylva/error.hpp"
#include "sylva/random.hpp"

namespace sylva {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(learning_rate_final > 0.0)) throw ConfigError("train: learning rates must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
  if (batch_rays < 1) throw ConfigError("train: batch_rays must be >= 1");
  if (iterations < 0) throw ConfigError("train: iterations must be >= 0");
  if (!(lambda_depth >= 0.0)) throw ConfigError("train: lambda_depth must be >= 0");
  if (!(lambda_warmup >= 0.0 && lambda_warmup <= 1.0)) throw ConfigError("train: lambda_warmup must lie in [0, 1]");
  if (n_coarse < 2 || n_fine < 0) throw ConfigError("train: need n_coarse >= 2 and n_fine >= 0");
}

RenderConfig TrainConfig::render_config() const {
  RenderConfig r;
  r.n_coarse = n_coarse;
  r.n_fine = n_fine;
  r.seed = seed;
  r.composite.background = background;
  r.precision = precision;
  r.threads = threads;
  return r;
}

void TrainLog::save_csv(const std::filesystem::path& path, bool include_time) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write train log: " + path.string());
  out << "iteration,L_C,L_D,total,ms\n" << std::setprecision(17);
  for (const auto& e : entries) {
    out << e.iteration << ',' << e.loss_color << ',' << e.loss_depth << ',' << e.loss_total << ','
        << (include_time ? e.ms : 0.0) << '\n';
  }
}

PhotometricLoss photometric_loss(std::span<const RenderResult> preds, std::span<const Vec3> targets) {
  if (preds.size() != targets.size()) throw ConfigError("photometric_loss: length mismatch");
  PhotometricLoss l;
  l.d_color.resize(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Vec3 r = preds[i].color - targets[i];
    l.value += r.squaredNorm();
    l.d_color[i] = 2.0 * r;
  }
  return l;
}

DepthLoss depth_loss(std::span<const RenderResult> preds, std::span<const std::optional<double>> priors) {
  if (preds.size() != priors.size()) throw ConfigError("depth_loss: length mismatch");
  DepthLoss l;
  l.d_depth.assign(preds.size(), 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!priors[i]) continue;
    const double r = preds[i].depth - *priors[i];
    l.value += r * r;
    l.d_depth[i] = 2.0 * r;
  }
  return l;
}

double total_loss(double loss_color, double loss_depth, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("total_loss: lambda must be >= 0");
  return lambda == 0.0 ? loss_color : loss_color + lambda * loss_depth;
}

void adam_step(FieldParams& params, const ParamGradients& grads, AdamState& state, const TrainConfig& cfg,
               double learning_rate) {
  const std::size_t n = params.values.size();
  if (grads.values.size() != n || !(grads.layout == params.layout)) throw ConfigError("adam_step: gradient shape mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) throw ConfigError("adam_step: optimizer state shape mismatch");
  ++state.step;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads.values[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params.values[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

std::vector<RaySupervision> build_supervision(std::span<const TrainingView> views, const PointCloud* cloud,
                                              const SupervisionConfig& cfg) {
  if (views.empty()) throw DataError("build_supervision: no views");
  std::vector<RaySupervision> out;
  for (const auto& view : views) {
    const auto& k = view.intrinsics;
    k.validate();
    if (view.image.width != k.width || view.image.height != k.height) {
      throw DataError("build_supervision: image size does not match intrinsics");
    }
    const std::size_t n_px = std::size_t(k.width) * k.height;
    std::vector<std::optional<Ray>> rays(n_px);
    for (int y = 0; y < k.height; ++y) {
      for (int x = 0; x < k.width; ++x) {
        rays[std::size_t(y) * k.width + x] = ray_in_bounds(k, view.pose, PixelCoord::center_of(x, y), cfg.bounds);
      }
    }
    std::vector<double> zbuf(n_px, std::numeric_limits<double>::infinity());
    if (cloud) {
      const int reach = int(std::ceil(cfg.splat_radius_px));
      const double r2 = cfg.splat_radius_px * cfg.splat_radius_px;
      for (const Vec3& p : cloud->points) {
        const auto proj = project(k, view.pose, p);
        if (!proj) continue;
        const auto [px, cam_depth] = *proj;
        const int x0 = int(std::floor(px.u)), y0 = int(std::floor(px.v));
        for (int y = y0 - reach; y <= y0 + reach; ++y) {
          for (int x = x0 - reach; x <= x0 + reach; ++x) {
            if (x < 0 || y < 0 || x >= k.width || y >= k.height) continue;
            const double du = x + 0.5 - px.u, dv = y + 0.5 - px.v;
            if (du * du + dv * dv > r2) continue;
            const std::size_t idx = std::size_t(y) * k.width + x;
            const auto& ray = rays[idx];
            if (!ray) continue;
            const double t = (p - ray->origin).dot(ray->direction);
            if (t < ray->t_near || t > ray->t_far) continue;
            zbuf[idx] = std::min(zbuf[idx], t);
          }
        }
      }
    }
    for (std::size_t idx = 0; idx < n_px; ++idx) {
      if (!rays[idx]) continue;
      RaySupervision s;
      s.ray = *rays[idx];
      s.color = view.image.pixels[idx];
      if (std::isfinite(zbuf[idx])) {
        s.depth_prior = zbuf[idx];
        s.prior_valid = true;
      }
      out.push_back(s);
    }
  }
  return out;
}

LossEvaluation evaluate_loss(const FieldParams& params, std::span<const RaySupervision> batch,
                             const RenderConfig& render, double lambda, bool with_grad, std::uint64_t stream,
                             std::span<const Vec3> backgrounds) {
  std::vector<Ray> rays(batch.size());
  std::vector<Vec3> colors(batch.size());
  std::vector<std::optional<double>> priors(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    rays[i] = batch[i].ray;
    colors[i] = batch[i].color;
    if (batch[i].prior_valid) priors[i] = batch[i].depth_prior;
  }
  BatchRenderer renderer(render);
  const auto& out = renderer.render(params, rays, stream, with_grad, backgrounds);
  LossEvaluation ev;
  ev.renders.reserve(out.size());
  for (const auto& r : out) ev.renders.push_back(r.result);
  const PhotometricLoss lc = photometric_loss(ev.renders, colors);
  ev.loss_color = lc.value;
  DepthLoss ld;
  if (lambda > 0.0) {
    ld = depth_loss(ev.renders, priors);
    ev.loss_depth = ld.value;
  } else {
    ld.d_depth.assign(batch.size(), 0.0);
  }
  ev.total = total_loss(ev.loss_color, ev.loss_depth, lambda);
  if (with_grad) {
    for (auto& g : ld.d_depth) g *= lambda;
    ev.grads = ParamGradients(params.layout);
    renderer.backward(params, lc.d_color, ld.d_depth, ev.grads);
  }
  return ev;
}

TrainResult train(std::span<const RaySupervision> supervisions, const TrainConfig& cfg, FieldParams init,
                  std::optional<AdamState> resume, const std::function<void(const TrainProgress&)>& on_step) {
  cfg.validate();
  if (supervisions.empty()) throw DataError("train: empty supervision set");
  for (const auto& s : supervisions) {
    if (s.prior_valid && (s.depth_prior < s.ray.t_near || s.depth_prior > s.ray.t_far)) {
      throw DataError("train: depth prior outside ray bounds");
    }
  }
  TrainResult res{std::move(init), resume.value_or(AdamState{}), {}};
  if (!res.params.all_finite()) throw NumericalError("train: initial parameters are not finite");

  const std::size_t n = supervisions.size();
  const std::size_t batch = std::min<std::size_t>(std::size_t(cfg.batch_rays), n);
  std::map<std::uint64_t, std::vector<std::uint32_t>> perms;
  auto permutation = [&](std::uint64_t epoch) -> const std::vector<std::uint32_t>& {
    auto it = perms.find(epoch);
    if (it != perms.end()) return it->second;
    if (perms.size() > 2) perms.erase(perms.begin());
    std::vector<std::uint32_t> p(n);
    std::iota(p.begin(), p.end(), 0u);
    Rng rng(mix_seed(cfg.seed, 0x5eedULL, epoch));
    shuffle(p.begin(), p.end(), rng);
    return perms.emplace(epoch, std::move(p)).first->second;
  };

  const RenderConfig rcfg = cfg.render_config();
  BatchRenderer renderer(rcfg);
  ParamGradients grads(res.params.layout);
  std::vector<Ray> rays(batch);
  std::vector<Vec3> colors(batch);
  std::vector<std::optional<double>> priors(batch);
  std::vector<Vec3> backgrounds;
  const double horizon = std::max(1, cfg.iterations);

  for (std::uint64_t it = res.state.step; it < std::uint64_t(cfg.iterations); ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t j = 0; j < batch; ++j) {
      const std::uint64_t pos = it * batch + j;
      const auto& perm = permutation(pos / n);
      const RaySupervision& s = supervisions[perm[pos % n]];
      rays[j] = s.ray;
      colors[j] = s.color;
      priors[j] = s.prior_valid ? std::optional<double>(s.depth_prior) : std::nullopt;
    }
    if (cfg.random_background) {
      Rng bg_rng(mix_seed(cfg.seed, 0xb6ULL, it));
      backgrounds.resize(batch);
      for (auto& b : backgrounds) {
        for (int k = 0; k < 3; ++k) b[k] = uniform01(bg_rng);
      }
    }
    const auto& out = renderer.render(res.params, rays, it, true, backgrounds);
    std::vector<RenderResult> renders;
    renders.reserve(batch);
    for (const auto& r : out) renders.push_back(r.result);
    const PhotometricLoss lc = photometric_loss(renders, colors);
    double lambda = 0.0;
    DepthLoss ld;
    if (cfg.lambda_depth > 0.0) {
      const double ramp = cfg.lambda_warmup > 0.0 ? std::min(1.0, double(it + 1) / (cfg.lambda_warmup * horizon)) : 1.0;
      lambda = cfg.lambda_depth * ramp;
      ld = depth_loss(renders, priors);
      for (auto& g : ld.d_depth) g *= lambda;
    } else {
      ld.d_depth.assign(batch, 0.0);
    }
    const double total = total_loss(lc.value, ld.value, lambda);
    if (!std::isfinite(total)) {
      throw NumericalError("train: non-finite loss at iteration " + std::to_string(it));
    }
    grads.set_zero();
    renderer.backward(res.params, lc.d_color, ld.d_depth, grads);
    const double lr = cfg.learning_rate * std::pow(cfg.learning_rate_final / cfg.learning_rate, double(it) / horizon);
    adam_step(res.params, grads, res.state, cfg, lr);
    if (!res.params.all_finite()) throw NumericalError("train: parameters diverged at iteration " + std::to_string(it));
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.log.entries.push_back({it, lc.value, ld.value, total, ms});
    if (on_step) on_step({it, res.params, res.state, res.log.entries.back()});
  }
  return res;
}

namespace {
constexpr char kAdamMagic[8] = {'S', 'Y', 'L', 'V', 'A', 'O', 'P', 'T'};
constexpr std::uint32_t kAdamVersion = 1;
}  // namespace

void save_adam_state(const AdamState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write optimizer state: " + path.string());
  using namespace byte_io;
  out.write(kAdamMagic, 8);
  write_u32(out, kAdamVersion);
  write_u64(out, state.step);
  write_u64(out, state.m.size());
  for (double v : state.m) write_f64(out, v);
  for (double v : state.v) write_f64(out, v);
}

AdamState load_adam_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open optimizer state: " + path.string());
  using namespace byte_io;
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kAdamMagic, 8) != 0) throw DataError(path.string() + ": bad magic bytes");
  std::uint32_t version;
  std::uint64_t count;
  AdamState s;
  if (!read_u32(in, version) || version != kAdamVersion) throw DataError(path.string() + ": unsupported version");
  if (!read_u64(in, s.step) || !read_u64(in, count)) throw DataError(path.string() + ": truncated header");
  s.m.resize(count);
  s.v.resize(count);
  for (auto& v : s.m)
    if (!read_f64(in, v)) throw DataError(path.string() + ": truncated payload");
  for (auto& v : s.v)
    if (!read_f64(in, v)) throw DataError(path.string() + ": truncated payload");
  return s;
}

}  // namespace sylva
