// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "sylva/error.hpp"
#include "sylva/field.hpp"
#include "sylva/image.hpp"
#include "sylva/lidar.hpp"
#include "sylva/metrics.hpp"
#include "sylva/parallel.hpp"
#include "sylva/random.hpp"
#include "sylva/renderer.hpp"
#include "sylva/synth.hpp"
#include "sylva/training.hpp"

namespace fs = std::filesystem;

namespace sylva::cli {

int Context::worker_threads() const { return reproducible ? 1 : resolve_threads(threads); }

namespace {

void require_path(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing required parameter: ") + what);
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path);
}

fs::path output_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("missing required parameter: out");
  fs::create_directories(out);
  return out;
}

std::optional<Vec3> color_or_none(const std::vector<double>& v, const char* what) {
  if (v.empty()) return std::nullopt;
  if (v.size() != 3) throw ConfigError(std::string(what) + " needs three components");
  return Vec3(v[0], v[1], v[2]);
}

Precision parse_precision(const std::string& s) {
  if (s == "f64") return Precision::kF64;
  if (s == "f32") return Precision::kF32;
  throw ConfigError("precision must be f64 or f32, got '" + s + "'");
}

IcpMetric parse_metric(const std::string& s) {
  if (s == "point-to-point") return IcpMetric::kPointToPoint;
  if (s == "point-to-plane") return IcpMetric::kPointToPlane;
  throw ConfigError("metric must be point-to-point or point-to-plane, got '" + s + "'");
}

std::vector<Camera> rig_cameras(const CameraRig& rig) {
  std::vector<Camera> cams;
  for (const auto& f : rig.frames) cams.push_back({rig.intrinsics, f.pose});
  return cams;
}

Aabb rig_bounds(const CameraRig& rig, const std::string& path) {
  if (!rig.bounds) throw DataError("camera file has no bounds: " + path);
  return *rig.bounds;
}

PointCloud merge_all(const std::vector<PointCloud>& clouds) { return merge(clouds); }

PointCloud near_ground(const PointCloud& cloud, double max_height) {
  const GroundModel g = fit_ground(cloud);
  PointCloud out;
  out.source = cloud.source;
  out.frame = cloud.frame;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (p.z() - g.height_at(p.x(), p.y()) <= max_height) out.points.push_back(p);
  }
  return out;
}

Rect2 square(double half) { return Rect2{Vec2(-half, -half), Vec2(half, half)}; }

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string out = "synth";
  std::uint64_t seed = 1;
  double plot_half = 10.0;
  double extent_half = 20.0;
  int n_trees = 10;
  double spacing = 3.0;
  double dbh_min = 0.2, dbh_max = 0.5;
  double height_min = 8.0, height_max = 14.0;
  int n_mounds = 0;
  double texture_amplitude = 0.3;
  double texture_period = 5.0;
  int image_size = 48;
  double fov = 20.0;
  double altitude = 60.0;
  int grid = 4;
  double rig_half = 8.0;
  double als_density = 10.0;
  double als_altitude = 80.0;
  double als_noise = 0.0;
  int tls_scans = 5;
  double tls_offset = 6.0;
  double tls_res = 0.2;
  double tls_range = 30.0;
  double tls_noise = 0.005;
  double tls_elevation_min = -60.0;
  double tls_elevation_max = 60.0;
};

Vec3 scanner_origin(const SceneDescription& scene, const Vec2& xy) {
  Vec3 o(xy.x(), xy.y(), scene.ground.height_at(xy.x(), xy.y()) + 1.5);
  const auto clear = [&] {
    for (const auto& t : scene.trees) {
      if ((t.trunk.base.head<2>() - o.head<2>()).norm() < t.trunk.radius + 0.5) return false;
    }
    return !inside_solid(scene, o);
  };
  for (int step = 0; !clear(); ++step) {
    if (step > 1000) throw DataError("no free scanner position near the requested origin");
    o.x() += 0.7;
    o.z() = scene.ground.height_at(o.x(), o.y()) + 1.5;
  }
  return o;
}

void run_synth(const SynthOptions& o, const Context& ctx) {
  const fs::path dir = output_dir(o.out);
  const int threads = ctx.worker_threads();
  ForestOptions fo;
  fo.ground.texture = {o.texture_amplitude, o.texture_period};
  fo.n_mounds = o.n_mounds;
  SceneDescription scene = generate_forest(o.seed, square(o.plot_half), o.n_trees, o.spacing, {o.dbh_min, o.dbh_max},
                                           {o.height_min, o.height_max}, fo);
  if (o.extent_half > o.plot_half) {
    scene.extent.min.head<2>() = Vec2(-o.extent_half, -o.extent_half);
    scene.extent.max.head<2>() = Vec2(o.extent_half, o.extent_half);
  }
  save_scene(scene, dir / "scene.json");

  const CameraIntrinsics intr = CameraIntrinsics::from_fov(o.image_size, o.image_size, o.fov);
  const std::vector<Camera> cams = aerial_rig(square(o.rig_half), o.altitude, o.grid, o.grid, intr);
  const std::vector<SyntheticView> views = render_views(scene, cams, threads);
  CameraRig rig;
  rig.intrinsics = intr;
  rig.bounds = scene.extent;
  for (std::size_t i = 0; i < views.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "view_%03zu", i);
    save_ppm(views[i].color, dir / (std::string(stem) + ".ppm"));
    save_pfm(views[i].depth, dir / (std::string(stem) + ".pfm"));
    rig.frames.push_back({cams[i].pose, std::string(stem) + ".ppm", std::string(stem) + ".pfm"});
  }
  save_camera_rig(rig, dir / "cameras.json");

  AlsConfig ac;
  ac.density = o.als_density;
  ac.altitude = o.als_altitude;
  ac.seed = mix_seed(o.seed, 1);
  ac.range_noise = o.als_noise;
  ac.region = square(o.plot_half);
  save_ply(simulate_als(scene, ac).cloud, dir / "als.ply");

  const Vec2 offsets[] = {Vec2(0, 0), Vec2(-1, -1), Vec2(1, -1), Vec2(-1, 1), Vec2(1, 1)};
  if (o.tls_scans < 0 || o.tls_scans > 5) throw ConfigError("tls_scans must be in [0, 5]");
  std::vector<PointCloud> scans;
  for (int k = 0; k < o.tls_scans; ++k) {
    TlsConfig tc;
    tc.origin = scanner_origin(scene, o.tls_offset * offsets[k]);
    tc.angular_res_deg = o.tls_res;
    tc.max_range = o.tls_range;
    tc.range_noise = o.tls_noise;
    tc.min_elevation_deg = o.tls_elevation_min;
    tc.max_elevation_deg = o.tls_elevation_max;
    tc.seed = mix_seed(o.seed, 2, std::uint64_t(k));
    scans.push_back(simulate_tls(scene, tc, threads).cloud);
  }
  if (!scans.empty()) save_ply(merge_all(scans), dir / "tls.ply");
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string cameras;
  std::string prior;
  std::string out = "train";
  std::string resume;
  int iterations = 1000;
  int batch_rays = 1024;
  int n_coarse = 64;
  int n_fine = 64;
  double lambda_depth = 0.1;
  double lambda_warmup = 0.1;
  double learning_rate = 5e-3;
  double learning_rate_final = 5e-4;
  std::uint64_t seed = 1;
  int hidden = 64;
  int n_freq_pos = 10;
  int n_freq_dir = 4;
  std::string precision = "f64";
  double splat_radius = 1.0;
  bool random_background = false;
  std::vector<double> background{0.62, 0.75, 0.92};
  int log_every = 100;
  int checkpoint_every = 0;
};

TrainConfig train_config(const TrainOptions& o, const Context& ctx) {
  TrainConfig cfg;
  cfg.iterations = o.iterations;
  cfg.batch_rays = o.batch_rays;
  cfg.n_coarse = o.n_coarse;
  cfg.n_fine = o.n_fine;
  cfg.lambda_depth = o.lambda_depth;
  cfg.lambda_warmup = o.lambda_warmup;
  cfg.learning_rate = o.learning_rate;
  cfg.learning_rate_final = o.learning_rate_final;
  cfg.seed = o.seed;
  cfg.precision = parse_precision(o.precision);
  cfg.random_background = o.random_background;
  cfg.background = color_or_none(o.background, "background");
  cfg.threads = ctx.worker_threads();
  cfg.validate();
  return cfg;
}

void run_train(const TrainOptions& o, const Context& ctx) {
  require_path(o.cameras, "cameras");
  if (!o.prior.empty()) require_path(o.prior, "prior");
  const TrainConfig cfg = train_config(o, ctx);
  const CameraRig rig = load_camera_rig(o.cameras);
  const Aabb bounds = rig_bounds(rig, o.cameras);
  const fs::path base = fs::path(o.cameras).parent_path();
  std::vector<TrainingView> views;
  for (const auto& f : rig.frames) views.push_back({load_ppm(base / f.image), rig.intrinsics, f.pose});
  std::optional<PointCloud> prior;
  if (!o.prior.empty()) prior = load_ply(o.prior);
  const auto sups = build_supervision(views, prior ? &*prior : nullptr, {bounds, o.splat_radius});

  FieldParams init;
  std::optional<AdamState> state;
  if (!o.resume.empty()) {
    require_path(o.resume, "resume");
    init = load_params(fs::path(o.resume) / "field.bin");
    state = load_adam_state(fs::path(o.resume) / "adam.bin");
  } else {
    init = init_params({o.n_freq_pos, o.n_freq_dir}, o.hidden, o.seed, bounds.center(), bounds.extent().maxCoeff() / 2);
  }
  const fs::path dir = output_dir(o.out);
  const auto progress = [&](const TrainProgress& p) {
    if (o.log_every > 0 && p.iteration % std::uint64_t(o.log_every) == 0) {
      std::fprintf(stderr, "iteration %llu  L_C %.6g  L_D %.6g  total %.6g\n", (unsigned long long)p.iteration,
                   p.entry.loss_color, p.entry.loss_depth, p.entry.loss_total);
    }
    if (o.checkpoint_every > 0 && (p.iteration + 1) % std::uint64_t(o.checkpoint_every) == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "iter_%06llu", (unsigned long long)(p.iteration + 1));
      const fs::path ck = dir / "checkpoints" / name;
      fs::create_directories(ck);
      save_params(p.params, ck / "field.bin");
      save_adam_state(p.state, ck / "adam.bin");
    }
  };
  const TrainResult r = train(sups, cfg, std::move(init), std::move(state), progress);
  save_params(r.params, dir / "field.bin");
  save_adam_state(r.state, dir / "adam.bin");
  r.log.save_csv(dir / "train_log.csv", !ctx.reproducible);
}

// ---------------------------------------------------------------------------

struct ExportOptions {
  std::string field;
  std::string cameras;
  std::string out = "nerf.ply";
  int stride = 1;
  double std_max = 0.5;
  double alpha_min = 0.5;
  int n_coarse = 64;
  int n_fine = 64;
  std::string precision = "f64";
  std::vector<double> background{0.62, 0.75, 0.92};
};

void run_export(const ExportOptions& o, const Context& ctx) {
  require_path(o.field, "field");
  require_path(o.cameras, "cameras");
  const FieldParams params = load_params(o.field);
  const CameraRig rig = load_camera_rig(o.cameras);
  ExportConfig ec;
  ec.stride = o.stride;
  ec.std_max = o.std_max;
  ec.alpha_min = o.alpha_min;
  ec.render.n_coarse = o.n_coarse;
  ec.render.n_fine = o.n_fine;
  ec.render.precision = parse_precision(o.precision);
  ec.render.composite.background = color_or_none(o.background, "background");
  ec.render.threads = ctx.worker_threads();
  const PointCloud cloud = export_cloud(params, rig_cameras(rig), rig_bounds(rig, o.cameras), ec);
  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_ply(cloud, out);
}

// ---------------------------------------------------------------------------

struct RegisterOptions {
  std::string source;
  std::string target;
  std::string out = "register";
  std::string metric = "point-to-plane";
  std::vector<double> gates{1.0, 0.5, 0.3};
  int max_iter = 100;
  double trim = 0.1;
  double ground_band = 2.0;
};

void run_register(const RegisterOptions& o, const Context&) {
  require_path(o.source, "source");
  require_path(o.target, "target");
  if (o.gates.empty()) throw ConfigError("gates must list at least one correspondence distance");
  const PointCloud source = load_ply(o.source);
  const PointCloud target = load_ply(o.target);
  IcpConfig ic;
  ic.metric = parse_metric(o.metric);
  ic.max_iter = o.max_iter;
  ic.trim_fraction = o.trim;
  const bool band = o.ground_band > 0.0;
  const RegistrationResult r = coregister_staged(band ? near_ground(source, o.ground_band) : source,
                                                 band ? near_ground(target, o.ground_band) : target,
                                                 PoseSE3::identity(), ic, o.gates);
  const fs::path dir = output_dir(o.out);
  nlohmann::json j;
  const Mat4 m = r.transform.matrix();
  for (int i = 0; i < 4; ++i) j["matrix"].push_back({m(i, 0), m(i, 1), m(i, 2), m(i, 3)});
  j["rms_residual"] = r.rms_residual;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  std::ofstream(dir / "transform.json") << j.dump(2) << '\n';
  PointCloud moved = transform_cloud(source, r.transform);
  moved.frame = target.frame;
  save_ply(moved, dir / "registered.ply");
}

// ---------------------------------------------------------------------------

struct MetricsOptions {
  std::vector<std::string> clouds;
  std::string out = "metrics";
  std::string plot = "plot";
  bool normalized = false;
  double crop_half = 0.0;
  double cell = 0.25;
  double band_min = 0.5;
  double band_max = 2.5;
  int min_support = 5;
  double merge_radius = 1.0;
  double slice_center = 1.3;
  double slice_half_width = 0.05;
  int ransac_iters = 400;
  double inlier_tol = 0.01;
  std::uint64_t seed = 0;
};

void run_metrics(const MetricsOptions& o, const Context&) {
  if (o.clouds.empty()) throw ConfigError("missing required parameter: clouds");
  std::vector<PointCloud> clouds;
  for (const auto& c : o.clouds) {
    require_path(c, "cloud");
    clouds.push_back(load_ply(c));
  }
  PointCloud cloud = merge_all(clouds);
  if (!o.normalized) cloud = ground_normalize(cloud);
  if (o.crop_half > 0.0) cloud = crop_cloud(cloud, square(o.crop_half));
  DetectConfig dc;
  dc.cell = o.cell;
  dc.band_min = o.band_min;
  dc.band_max = o.band_max;
  if (o.min_support < 1) throw ConfigError("min_support must be positive");
  dc.min_support = std::size_t(o.min_support);
  dc.merge_radius = o.merge_radius;
  DbhConfig bc;
  bc.slice_center = o.slice_center;
  bc.slice_half_width = o.slice_half_width;
  bc.ransac_iters = o.ransac_iters;
  bc.inlier_tol = o.inlier_tol;
  bc.seed = o.seed;
  const std::vector<PlotMetrics> plots = {compute_plot_metrics(cloud, dc, bc, o.plot)};
  const fs::path dir = output_dir(o.out);
  write_report_jsonl(plots, dir / "report.jsonl");
  write_report_csv(plots, dir / "report.csv");
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string scene;
  std::string als;
  std::string tls;
  std::string nerf;
  std::string out = "eval";
  double crop_half = 10.0;
  double cell = 0.25;
  double trunk_band_min = 0.5;
  double trunk_band_max = 2.5;
  double canopy_band_min = 3.0;
  double canopy_band_max = 100.0;
  double match_radius = 1.0;
};

void run_eval(const EvalOptions& o, const Context&) {
  require_path(o.scene, "scene");
  require_path(o.als, "als");
  require_path(o.tls, "tls");
  require_path(o.nerf, "nerf");
  const SceneDescription scene = load_scene(o.scene);
  const PointCloud als = load_ply(o.als), tls = load_ply(o.tls), nerf = load_ply(o.nerf);
  const Rect2 region = square(o.crop_half);
  std::vector<const TreePrimitive*> truth;
  for (const auto& t : scene.trees) {
    if (region.contains(t.trunk.base.head<2>())) truth.push_back(&t);
  }

  struct Modality {
    const char* name;
    bool nf, als, tls;
  };
  const Modality grid[] = {{"NF", true, false, false},      {"ALS", false, true, false},
                           {"TLS", false, false, true},     {"ALS+TLS", false, true, true},
                           {"NF+ALS", true, true, false},   {"NF+TLS", true, false, true},
                           {"NF+ALS+TLS", true, true, true}};
  const fs::path dir = output_dir(o.out);
  std::ofstream csv(dir / "eval.csv");
  csv << "modality,points,detected,truth,count_error,dbh_fitted,dbh_error_pct\n";
  for (const Modality& m : grid) {
    std::vector<PointCloud> parts;
    if (m.nf) parts.push_back(nerf);
    if (m.als) parts.push_back(als);
    if (m.tls) parts.push_back(tls);
    const PointCloud cloud = crop_cloud(ground_normalize(merge_all(parts)), region);
    // Stems are visible only from the ground; aerial clouds are clustered on crowns.
    DetectConfig dc;
    dc.cell = o.cell;
    dc.band_min = m.tls ? o.trunk_band_min : o.canopy_band_min;
    dc.band_max = m.tls ? o.trunk_band_max : o.canopy_band_max;
    const std::vector<TreeDetection> dets = detect_trees_bev(cloud, dc);

    std::vector<double> pred, ref;
    std::vector<bool> used(truth.size(), false);
    for (const auto& d : dets) {
      std::size_t best = truth.size();
      double best_dist = o.match_radius;
      for (std::size_t k = 0; k < truth.size(); ++k) {
        const double dist = (truth[k]->trunk.base.head<2>() - d.position).norm();
        if (!used[k] && dist <= best_dist) {
          best = k;
          best_dist = dist;
        }
      }
      if (best == truth.size()) continue;
      used[best] = true;
      const DbhResult r = estimate_dbh(cloud, d);
      if (!r.ok()) continue;
      pred.push_back(r.estimate.diameter);
      ref.push_back(truth[best]->dbh());
    }
    const long err = long(dets.size()) - long(truth.size());
    csv << m.name << ',' << cloud.size() << ',' << dets.size() << ',' << truth.size() << ',' << err << ','
        << pred.size() << ',';
    if (!pred.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", evaluate_dbh(pred, ref));
      csv << buf;
    }
    csv << '\n';
  }
}

// Directory that receives the resolved config snapshot.
fs::path snapshot_dir(const SynthOptions& o) { return o.out; }
fs::path snapshot_dir(const TrainOptions& o) { return o.out; }
fs::path snapshot_dir(const ExportOptions& o) {
  const fs::path parent = fs::path(o.out).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}
fs::path snapshot_dir(const RegisterOptions& o) { return o.out; }
fs::path snapshot_dir(const MetricsOptions& o) { return o.out; }
fs::path snapshot_dir(const EvalOptions& o) { return o.out; }

void declare(ParamSet& p, SynthOptions& o) {
  p.add("out", o.out, "output directory");
  p.add("seed", o.seed, "scene and sensor seed");
  p.add("plot_half", o.plot_half, "half side of the square plot holding the trees (m)");
  p.add("extent_half", o.extent_half, "half side of the horizontal scene bounds (m)");
  p.add("n_trees", o.n_trees, "number of trees");
  p.add("spacing", o.spacing, "minimum trunk spacing (m)");
  p.add("dbh_min", o.dbh_min, "smallest stem diameter (m)");
  p.add("dbh_max", o.dbh_max, "largest stem diameter (m)");
  p.add("height_min", o.height_min, "lowest tree (m)");
  p.add("height_max", o.height_max, "tallest tree (m)");
  p.add("n_mounds", o.n_mounds, "terrain mounds");
  p.add("texture_amplitude", o.texture_amplitude, "ground texture contrast");
  p.add("texture_period", o.texture_period, "ground texture period (m)");
  p.add("image_size", o.image_size, "square image side (px)");
  p.add("fov", o.fov, "horizontal field of view (deg)");
  p.add("altitude", o.altitude, "camera altitude (m)");
  p.add("grid", o.grid, "cameras per side of the nadir grid");
  p.add("rig_half", o.rig_half, "half side of the camera grid (m)");
  p.add("als_density", o.als_density, "ALS pulses per square meter");
  p.add("als_altitude", o.als_altitude, "ALS flying height (m)");
  p.add("als_noise", o.als_noise, "ALS range noise sigma (m)");
  p.add("tls_scans", o.tls_scans, "TLS scan positions, 0 to 5");
  p.add("tls_offset", o.tls_offset, "offset of the outer scan positions (m)");
  p.add("tls_res", o.tls_res, "TLS angular step (deg)");
  p.add("tls_range", o.tls_range, "TLS maximum range (m)");
  p.add("tls_noise", o.tls_noise, "TLS range noise sigma (m)");
  p.add("tls_elevation_min", o.tls_elevation_min, "lowest TLS elevation (deg)");
  p.add("tls_elevation_max", o.tls_elevation_max, "highest TLS elevation (deg)");
}

void declare(ParamSet& p, TrainOptions& o) {
  p.add("cameras", o.cameras, "camera file written by synth");
  p.add("prior", o.prior, "LiDAR cloud for depth priors (optional)");
  p.add("out", o.out, "output directory");
  p.add("resume", o.resume, "directory of a previous run to continue");
  p.add("iterations", o.iterations, "total optimizer steps");
  p.add("batch_rays", o.batch_rays, "rays per step");
  p.add("n_coarse", o.n_coarse, "coarse samples per ray");
  p.add("n_fine", o.n_fine, "fine samples per ray");
  p.add("lambda_depth", o.lambda_depth, "depth loss weight; 0 trains on color only");
  p.add("lambda_warmup", o.lambda_warmup, "fraction of the run over which lambda ramps up");
  p.add("learning_rate", o.learning_rate, "initial step size");
  p.add("learning_rate_final", o.learning_rate_final, "step size at the last iteration");
  p.add("seed", o.seed, "initialization and sampling seed");
  p.add("hidden", o.hidden, "hidden layer width");
  p.add("n_freq_pos", o.n_freq_pos, "position encoding octaves");
  p.add("n_freq_dir", o.n_freq_dir, "direction encoding octaves");
  p.add("precision", o.precision, "f64 or f32");
  p.add("splat_radius", o.splat_radius, "prior splat radius (px)");
  p.add("random_background", o.random_background, "composite over random colors");
  p.add("background", o.background, "background color r,g,b; empty for none");
  p.add("log_every", o.log_every, "progress line interval; 0 disables");
  p.add("checkpoint_every", o.checkpoint_every, "write field and optimizer state every K iterations; 0 disables");
}

void declare(ParamSet& p, ExportOptions& o) {
  p.add("field", o.field, "trained field.bin");
  p.add("cameras", o.cameras, "camera file");
  p.add("out", o.out, "output PLY");
  p.add("stride", o.stride, "pixel stride");
  p.add("std_max", o.std_max, "largest accepted depth spread (m)");
  p.add("alpha_min", o.alpha_min, "smallest accepted accumulated alpha");
  p.add("n_coarse", o.n_coarse, "coarse samples per ray");
  p.add("n_fine", o.n_fine, "fine samples per ray");
  p.add("precision", o.precision, "f64 or f32");
  p.add("background", o.background, "background color r,g,b; empty for none");
}

void declare(ParamSet& p, RegisterOptions& o) {
  p.add("source", o.source, "cloud to move");
  p.add("target", o.target, "reference cloud");
  p.add("out", o.out, "output directory");
  p.add("metric", o.metric, "point-to-point or point-to-plane");
  p.add("gates", o.gates, "correspondence distance per stage (m)");
  p.add("max_iter", o.max_iter, "iterations per stage");
  p.add("trim", o.trim, "fraction of worst matches ignored");
  p.add("ground_band", o.ground_band, "register only points this high above ground; 0 keeps all");
}

void declare(ParamSet& p, MetricsOptions& o) {
  p.add("clouds", o.clouds, "input clouds, merged");
  p.add("out", o.out, "output directory");
  p.add("plot", o.plot, "plot name in the report");
  p.add("normalized", o.normalized, "input heights are already above ground");
  p.add("crop_half", o.crop_half, "keep points within this half side (m); 0 keeps all");
  p.add("cell", o.cell, "BEV cell size (m)");
  p.add("band_min", o.band_min, "lower edge of the detection band (m)");
  p.add("band_max", o.band_max, "upper edge of the detection band (m)");
  p.add("min_support", o.min_support, "smallest cluster in cells");
  p.add("merge_radius", o.merge_radius, "clusters closer than this merge (m)");
  p.add("slice_center", o.slice_center, "breast height (m)");
  p.add("slice_half_width", o.slice_half_width, "slice half thickness (m)");
  p.add("ransac_iters", o.ransac_iters, "circle hypotheses");
  p.add("inlier_tol", o.inlier_tol, "circle inlier band (m)");
  p.add("seed", o.seed, "RANSAC seed");
}

void declare(ParamSet& p, EvalOptions& o) {
  p.add("scene", o.scene, "scene file with the true trees");
  p.add("als", o.als, "ALS cloud");
  p.add("tls", o.tls, "TLS cloud");
  p.add("nerf", o.nerf, "cloud exported from the trained field");
  p.add("out", o.out, "output directory");
  p.add("crop_half", o.crop_half, "evaluated plot half side (m)");
  p.add("cell", o.cell, "BEV cell size (m)");
  p.add("trunk_band_min", o.trunk_band_min, "stem band floor for modalities with TLS (m)");
  p.add("trunk_band_max", o.trunk_band_max, "stem band ceiling for modalities with TLS (m)");
  p.add("canopy_band_min", o.canopy_band_min, "crown band floor for aerial modalities (m)");
  p.add("canopy_band_max", o.canopy_band_max, "crown band ceiling for aerial modalities (m)");
  p.add("match_radius", o.match_radius, "detection to tree matching distance (m)");
}

template <class Options>
std::unique_ptr<Command> make_command(CLI::App& app, const char* name, const char* help,
                                      void (*run)(const Options&, const Context&)) {
  auto cmd = std::make_unique<Command>();
  auto opts = std::make_shared<Options>();
  cmd->app = app.add_subcommand(name, help);
  declare(cmd->params, *opts);
  cmd->app->add_option("--config", cmd->config, "JSON file with parameters; flags take precedence");
  cmd->params.bind(*cmd->app);
  Command* self = cmd.get();
  cmd->run = [self, opts, run, name = std::string(name)](const Context& ctx) {
    if (!self->config.empty()) self->params.apply_config(self->config);
    run(*opts, ctx);
    const fs::path dir = snapshot_dir(*opts);
    fs::create_directories(dir);
    self->params.save_resolved(dir / (name + ".config.json"));
  };
  return cmd;
}

}  // namespace

std::vector<std::unique_ptr<Command>> add_commands(CLI::App& app) {
  std::vector<std::unique_ptr<Command>> cmds;
  cmds.push_back(make_command<SynthOptions>(app, "synth", "generate a scene, images, depth maps and LiDAR", run_synth));
  cmds.push_back(make_command<TrainOptions>(app, "train", "fit a radiance field to posed images", run_train));
  cmds.push_back(make_command<ExportOptions>(app, "export", "back-project rendered depth to a cloud", run_export));
  cmds.push_back(make_command<RegisterOptions>(app, "register", "align one cloud onto another", run_register));
  cmds.push_back(make_command<MetricsOptions>(app, "metrics", "detect trees and estimate DBH", run_metrics));
  cmds.push_back(make_command<EvalOptions>(app, "eval", "compare modality combinations on a synthetic plot", run_eval));
  return cmds;
}

}  // namespace sylva::cli
