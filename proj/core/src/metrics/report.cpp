// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sylva/error.hpp"
#include "sylva/metrics.hpp"

namespace sylva {

PointCloud export_cloud(const FieldParams& params, std::span<const Camera> views, const Aabb& bounds,
                        const ExportConfig& cfg) {
  if (cfg.stride < 1) throw ConfigError("export: stride must be >= 1");
  if (!(cfg.std_max >= 0.0)) throw ConfigError("export: std_max must be >= 0");
  RenderConfig rc = cfg.render;
  rc.composite.renormalize = cfg.renormalize_depth;
  BatchRenderer renderer(rc);

  PointCloud out;
  out.source = SourceTag::kNERF;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const Camera& cam = views[v];
    cam.intrinsics.validate();
    cam.pose.validate();
    std::vector<Ray> rays;
    for (int y = 0; y < cam.intrinsics.height; y += cfg.stride) {
      for (int x = 0; x < cam.intrinsics.width; x += cfg.stride) {
        if (auto r = ray_in_bounds(cam.intrinsics, cam.pose, PixelCoord::center_of(x, y), bounds)) rays.push_back(*r);
      }
    }
    const auto& results = renderer.render(params, rays, v);
    for (std::size_t i = 0; i < rays.size(); ++i) {
      const RenderResult& r = results[i].result;
      if (!(r.accumulated_alpha >= cfg.alpha_min) || !(r.depth_std <= cfg.std_max) || !std::isfinite(r.depth)) continue;
      out.points.push_back(rays[i].at(r.depth));
      auto q = [](double c) { return std::uint8_t(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)); };
      out.colors.push_back({q(r.color.x()), q(r.color.y()), q(r.color.z())});
    }
  }
  out.tags.assign(out.points.size(), SourceTag::kNERF);
  return out;
}

PlotMetrics compute_plot_metrics(const PointCloud& normalized, const DetectConfig& detect, const DbhConfig& dbh,
                                 std::string plot) {
  PlotMetrics m;
  m.plot = std::move(plot);
  m.detections = detect_trees_bev(normalized, detect);
  m.tree_count = m.detections.size();
  for (const auto& d : m.detections) {
    const DbhResult r = estimate_dbh(normalized, d, dbh);
    m.dbh_status.push_back(r.status);
    m.dbh.push_back(r.estimate);
  }
  std::vector<SourceTag> tags;
  for (std::size_t i = 0; i < normalized.size(); ++i) tags.push_back(normalized.tag(i));
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  for (SourceTag t : tags) m.provenance.emplace_back(to_string(t));
  return m;
}

double evaluate_counts(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  if (pred.size() != truth.size()) throw ConfigError("evaluate_counts: length mismatch");
  if (pred.empty()) return 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = double(pred[i]) - double(truth[i]);
    ss += e * e;
  }
  return std::sqrt(ss / double(pred.size()));
}

double evaluate_counts(std::span<const PlotMetrics> pred, std::span<const std::size_t> truth) {
  std::vector<std::size_t> counts;
  for (const auto& p : pred) counts.push_back(p.tree_count);
  return evaluate_counts(counts, truth);
}

double evaluate_dbh(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ConfigError("evaluate_dbh: length mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 0.0) throw ConfigError("evaluate_dbh: zero truth value");
    sum += std::abs(pred[i] - truth[i]) / truth[i] * 100.0;
  }
  return sum / double(pred.size());
}

double evaluate_dbh(std::span<const DbhEstimate> pred, std::span<const double> truth) {
  std::vector<double> d;
  for (const auto& p : pred) d.push_back(p.diameter);
  return evaluate_dbh(d, truth);
}

namespace {

using nlohmann::json;

DbhStatus status_from(const std::string& s) {
  for (DbhStatus st : {DbhStatus::kOk, DbhStatus::kInsufficientSliceSupport, DbhStatus::kNoCircularStem}) {
    if (to_string(st) == s) return st;
  }
  throw DataError("report: unknown dbh status '" + s + "'");
}

}  // namespace

void write_report_jsonl(std::span<const PlotMetrics> plots, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (const auto& p : plots) {
    json j;
    j["plot"] = p.plot;
    j["tree_count"] = p.tree_count;
    j["provenance"] = p.provenance;
    j["trees"] = json::array();
    for (std::size_t i = 0; i < p.detections.size(); ++i) {
      const auto& d = p.detections[i];
      json t = {{"position", {d.position.x(), d.position.y()}},
                {"bbox", {d.bbox.min.x(), d.bbox.min.y(), d.bbox.max.x(), d.bbox.max.y()}},
                {"support", d.support}};
      if (i < p.dbh.size()) {
        const auto& e = p.dbh[i];
        t["dbh"] = {{"status", std::string(to_string(p.dbh_status.at(i)))},
                    {"center", {e.center.x(), e.center.y()}},
                    {"diameter", e.diameter},
                    {"rms_residual", e.rms_residual},
                    {"n_points", e.n_points}};
      }
      j["trees"].push_back(t);
    }
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<PlotMetrics> read_report_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open report: " + path.string());
  std::vector<PlotMetrics> plots;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      PlotMetrics p;
      p.plot = j.at("plot").get<std::string>();
      p.tree_count = j.at("tree_count").get<std::size_t>();
      p.provenance = j.at("provenance").get<std::vector<std::string>>();
      for (const json& t : j.at("trees")) {
        TreeDetection d;
        const auto pos = t.at("position").get<std::vector<double>>();
        const auto box = t.at("bbox").get<std::vector<double>>();
        if (pos.size() != 2 || box.size() != 4) throw DataError("bad detection geometry");
        d.position = Vec2(pos[0], pos[1]);
        d.bbox.min = Vec2(box[0], box[1]);
        d.bbox.max = Vec2(box[2], box[3]);
        d.support = t.at("support").get<std::size_t>();
        p.detections.push_back(d);
        if (t.contains("dbh")) {
          const json& e = t["dbh"];
          DbhEstimate est;
          const auto c = e.at("center").get<std::vector<double>>();
          if (c.size() != 2) throw DataError("bad dbh center");
          est.center = Vec2(c[0], c[1]);
          est.diameter = e.at("diameter").get<double>();
          est.rms_residual = e.at("rms_residual").get<double>();
          est.n_points = e.at("n_points").get<std::size_t>();
          p.dbh.push_back(est);
          p.dbh_status.push_back(status_from(e.at("status").get<std::string>()));
        }
      }
      plots.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError("report: malformed record on line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return plots;
}

void write_report_csv(std::span<const PlotMetrics> plots, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "plot,tree_count,n_dbh,mean_dbh_m,mean_rms_m\n";
  out << std::setprecision(9);
  for (const auto& p : plots) {
    double sd = 0.0, sr = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.dbh.size(); ++i) {
      if (p.dbh_status.at(i) != DbhStatus::kOk) continue;
      sd += p.dbh[i].diameter;
      sr += p.dbh[i].rms_residual;
      ++n;
    }
    out << p.plot << ',' << p.tree_count << ',' << n << ',';
    if (n > 0) {
      out << sd / double(n) << ',' << sr / double(n) << '\n';
    } else {
      out << ",\n";
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace sylva
