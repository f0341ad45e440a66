// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "sylva/field.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <variant>

#include "byte_io.hpp"
#include "sylva/error.hpp"
#include "sylva/random.hpp"

namespace sylva {

namespace {

void encode_into(const Vec3& x, int n_freq, double* out) {
  out[0] = x.x();
  out[1] = x.y();
  out[2] = x.z();
  if (n_freq == 0) return;
  double s[3], c[3];
  for (int a = 0; a < 3; ++a) {
    s[a] = std::sin(M_PI * x[a]);
    c[a] = std::cos(M_PI * x[a]);
  }
  for (int k = 0; k < n_freq; ++k) {
    double* o = out + 3 + 6 * k;
    for (int a = 0; a < 3; ++a) {
      o[a] = s[a];
      o[3 + a] = c[a];
    }
    for (int a = 0; a < 3; ++a) {
      const double s2 = 2.0 * s[a] * c[a];
      const double c2 = 1.0 - 2.0 * s[a] * s[a];
      s[a] = s2;
      c[a] = c2;
    }
  }
}

template <typename T>
T softplus(T x) {
  return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

void check_finite_inputs(std::span<const Vec3> xs, std::span<const Vec3> ds) {
  if (xs.size() != ds.size()) throw ConfigError("field evaluation: position/direction length mismatch");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!xs[i].allFinite() || !ds[i].allFinite()) throw NumericalError("field evaluation: non-finite input");
  }
}

template <typename T>
struct Kernel {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using Row = Eigen::Matrix<T, 1, Eigen::Dynamic>;

  // Parameters cast to T for the batch in flight.
  Mat w1, w2, wc_h, wc_d;
  Vec b1, b2, ws, bc;
  T bs = T(0);

  Mat enc_x, enc_d, z1, a1, z2, a2, rgb;
  Row s;

  void load(const FieldParams& p) {
    const FieldLayout& l = p.layout;
    w1 = p.view(l.w1).template cast<T>();
    b1 = p.view(l.b1).template cast<T>();
    w2 = p.view(l.w2).template cast<T>();
    b2 = p.view(l.b2).template cast<T>();
    ws = p.view(l.w_sigma).transpose().template cast<T>();
    bs = static_cast<T>(p.values[l.b_sigma.offset]);
    const auto wc = p.view(l.w_color);
    wc_h = wc.leftCols(l.hidden).template cast<T>();
    wc_d = wc.rightCols(l.dir_dim).template cast<T>();
    bc = p.view(l.b_color).template cast<T>();
  }

  void encode(const FieldParams& p, std::span<const Vec3> xs, std::span<const Vec3> ds) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    const int pd = p.layout.pos_dim, dd = p.layout.dir_dim;
    Eigen::VectorXd bx(pd), bd(dd);
    enc_x.resize(pd, n);
    enc_d.resize(dd, n);
    const double inv_scale = 1.0 / p.scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      encode_into((xs[i] - p.center) * inv_scale, p.encoding.n_freq_pos, bx.data());
      encode_into(ds[i], p.encoding.n_freq_dir, bd.data());
      enc_x.col(i) = bx.cast<T>();
      enc_d.col(i) = bd.cast<T>();
    }
  }

  void forward(const FieldParams& p, std::span<const Vec3> xs, std::span<const Vec3> ds,
               std::vector<double>& sigma, std::vector<Vec3>& color) {
    load(p);
    encode(p, xs, ds);
    const auto n = enc_x.cols();
    z1.noalias() = w1 * enc_x;
    z1.colwise() += b1;
    a1 = z1.cwiseMax(T(0));
    z2.noalias() = w2 * a1;
    z2.colwise() += b2;
    a2 = z2.cwiseMax(T(0));
    s.noalias() = ws.transpose() * a2;
    s.array() += bs;
    rgb.noalias() = wc_h * a2;
    rgb.noalias() += wc_d * enc_d;
    rgb.colwise() += bc;
    rgb = rgb.unaryExpr([](T v) { return sigmoid(v); });
    sigma.resize(std::size_t(n));
    color.resize(std::size_t(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      sigma[i] = static_cast<double>(softplus(s(i)));
      color[i] = rgb.col(i).template cast<double>();
    }
  }

  void backward(const FieldParams& p, std::span<const double> d_sigma, std::span<const Vec3> d_rgb,
                ParamGradients& g) const {
    const auto n = enc_x.cols();
    if (std::size_t(n) != d_sigma.size() || std::size_t(n) != d_rgb.size()) {
      throw ConfigError("field backward: upstream gradient shape does not match batch");
    }
    const FieldLayout& l = p.layout;
    Row ds(n);
    Mat dzc(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(d_sigma[i]) || !d_rgb[i].allFinite()) {
        throw NumericalError("field backward: non-finite upstream gradient");
      }
      ds(i) = static_cast<T>(d_sigma[i]) * sigmoid(s(i));
      for (int k = 0; k < 3; ++k) {
        const T c = rgb(k, i);
        dzc(k, i) = static_cast<T>(d_rgb[i][k]) * c * (T(1) - c);
      }
    }
    auto acc = [&](const FieldLayout::Tensor& t, const auto& expr) {
      Eigen::Map<Eigen::MatrixXd>(g.values.data() + t.offset, t.rows, t.cols) += expr.template cast<double>();
    };
    acc(l.w_sigma, (a2 * ds.transpose()).transpose());
    g.values[l.b_sigma.offset] += static_cast<double>(ds.sum());
    Mat gwc(3, l.hidden + l.dir_dim);
    gwc.leftCols(l.hidden).noalias() = dzc * a2.transpose();
    gwc.rightCols(l.dir_dim).noalias() = dzc * enc_d.transpose();
    acc(l.w_color, gwc);
    acc(l.b_color, Mat(dzc.rowwise().sum()));

    Mat dz2 = ws * ds;
    dz2.noalias() += wc_h.transpose() * dzc;
    dz2 = (z2.array() > T(0)).select(dz2, T(0));
    acc(l.w2, Mat(dz2 * a1.transpose()));
    acc(l.b2, Mat(dz2.rowwise().sum()));
    Mat dz1 = w2.transpose() * dz2;
    dz1 = (z1.array() > T(0)).select(dz1, T(0));
    acc(l.w1, Mat(dz1 * enc_x.transpose()));
    acc(l.b1, Mat(dz1.rowwise().sum()));
  }
};

}  // namespace

Eigen::VectorXd encode(const Vec3& x, int n_freq) {
  if (n_freq < 0) throw ConfigError("encode: n_freq must be >= 0");
  Eigen::VectorXd out(3 + 6 * n_freq);
  encode_into(x, n_freq, out.data());
  return out;
}

FieldLayout::FieldLayout(const EncodingConfig& enc, int hidden_width)
    : pos_dim(enc.pos_dim()), dir_dim(enc.dir_dim()), hidden(hidden_width) {
  std::size_t off = 0;
  auto take = [&](int rows, int cols) {
    Tensor t{off, rows, cols};
    off += std::size_t(rows) * cols;
    return t;
  };
  w1 = take(hidden, pos_dim);
  b1 = take(hidden, 1);
  w2 = take(hidden, hidden);
  b2 = take(hidden, 1);
  w_sigma = take(1, hidden);
  b_sigma = take(1, 1);
  w_color = take(3, hidden + dir_dim);
  b_color = take(3, 1);
  size = off;
}

bool FieldParams::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

ParamGradients& ParamGradients::operator+=(const ParamGradients& o) {
  if (!(layout == o.layout)) throw ConfigError("gradient shape mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

FieldParams init_params(const EncodingConfig& cfg, int hidden_width, std::uint64_t seed, const Vec3& center,
                        double scale) {
  if (hidden_width < 1) throw ConfigError("init_params: hidden_width must be >= 1");
  if (cfg.n_freq_pos < 0 || cfg.n_freq_dir < 0) throw ConfigError("init_params: frequency counts must be >= 0");
  if (!(scale > 0.0)) throw ConfigError("init_params: scale must be positive");
  FieldParams p;
  p.encoding = cfg;
  p.hidden_width = hidden_width;
  p.seed = seed;
  p.center = center;
  p.scale = scale;
  p.layout = FieldLayout(cfg, hidden_width);
  p.values.assign(p.layout.size, 0.0);
  Rng rng(seed);
  for (const auto& t : {p.layout.w1, p.layout.w2, p.layout.w_sigma, p.layout.w_color}) {
    // fan_in = cols, fan_out = rows
    const double a = std::sqrt(6.0 / double(t.rows + t.cols));
    for (std::size_t i = 0; i < std::size_t(t.rows) * t.cols; ++i) p.values[t.offset + i] = uniform(rng, -a, a);
  }
  return p;
}

struct FieldTape::Impl {
  std::variant<Kernel<double>, Kernel<float>> kernel;
};

FieldTape::FieldTape(Precision precision) : impl_(std::make_unique<Impl>()) {
  if (precision == Precision::kF32) impl_->kernel.emplace<Kernel<float>>();
}
FieldTape::~FieldTape() = default;
FieldTape::FieldTape(FieldTape&&) noexcept = default;
FieldTape& FieldTape::operator=(FieldTape&&) noexcept = default;

void FieldTape::forward(const FieldParams& params, std::span<const Vec3> xs, std::span<const Vec3> ds,
                        std::vector<double>& sigma, std::vector<Vec3>& rgb) {
  check_finite_inputs(xs, ds);
  std::visit([&](auto& k) { k.forward(params, xs, ds, sigma, rgb); }, impl_->kernel);
}

void FieldTape::backward(const FieldParams& params, std::span<const double> d_sigma, std::span<const Vec3> d_rgb,
                         ParamGradients& grads) const {
  if (!(grads.layout == params.layout) || grads.values.size() != params.values.size()) {
    throw ConfigError("field backward: gradient buffer shape mismatch");
  }
  std::visit([&](const auto& k) { k.backward(params, d_sigma, d_rgb, grads); }, impl_->kernel);
}

std::size_t FieldTape::size() const {
  return std::visit([](const auto& k) { return std::size_t(k.enc_x.cols()); }, impl_->kernel);
}

FieldOutput field_eval(const FieldParams& params, const Vec3& x, const Vec3& d) {
  const auto out = field_eval_batch(params, std::span<const Vec3>(&x, 1), std::span<const Vec3>(&d, 1));
  return out.front();
}

std::vector<FieldOutput> field_eval_batch(const FieldParams& params, std::span<const Vec3> xs,
                                          std::span<const Vec3> ds, Precision precision) {
  FieldTape tape(precision);
  std::vector<double> sigma;
  std::vector<Vec3> rgb;
  tape.forward(params, xs, ds, sigma, rgb);
  std::vector<FieldOutput> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = {sigma[i], rgb[i]};
  return out;
}

ParamGradients field_backward(const FieldParams& params, std::span<const Vec3> xs, std::span<const Vec3> ds,
                              std::span<const double> d_sigma, std::span<const Vec3> d_rgb) {
  FieldTape tape;
  std::vector<double> sigma;
  std::vector<Vec3> rgb;
  tape.forward(params, xs, ds, sigma, rgb);
  ParamGradients g(params.layout);
  tape.backward(params, d_sigma, d_rgb, g);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {
constexpr char kParamMagic[8] = {'S', 'Y', 'L', 'V', 'A', 'F', 'L', 'D'};
constexpr std::uint32_t kParamVersion = 1;
}  // namespace

void save_params(const FieldParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  using namespace byte_io;
  out.write(kParamMagic, sizeof(kParamMagic));
  write_u32(out, kParamVersion);
  write_u32(out, std::uint32_t(params.encoding.n_freq_pos));
  write_u32(out, std::uint32_t(params.encoding.n_freq_dir));
  write_u32(out, std::uint32_t(params.hidden_width));
  write_u64(out, params.seed);
  for (int a = 0; a < 3; ++a) write_f64(out, params.center[a]);
  write_f64(out, params.scale);
  const auto tensors = params.layout.tensors();
  write_u32(out, std::uint32_t(tensors.size()));
  for (const auto& t : tensors) {
    write_u32(out, std::uint32_t(t.rows));
    write_u32(out, std::uint32_t(t.cols));
  }
  write_u64(out, params.values.size());
  for (double v : params.values) write_f64(out, v);
}

FieldParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  using namespace byte_io;
  const std::string where = "checkpoint " + path.string() + ": ";
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kParamMagic, 8) != 0) throw DataError(where + "bad magic bytes");
  std::uint32_t version, nfp, nfd, hidden, ntensors;
  FieldParams p;
  bool ok = read_u32(in, version);
  if (ok && version != kParamVersion) throw DataError(where + "unsupported version " + std::to_string(version));
  ok = ok && read_u32(in, nfp) && read_u32(in, nfd) && read_u32(in, hidden) && read_u64(in, p.seed);
  for (int a = 0; a < 3 && ok; ++a) ok = read_f64(in, p.center[a]);
  ok = ok && read_f64(in, p.scale) && read_u32(in, ntensors);
  if (!ok) throw DataError(where + "truncated header");
  p.encoding = {int(nfp), int(nfd)};
  p.hidden_width = int(hidden);
  p.layout = FieldLayout(p.encoding, p.hidden_width);
  const auto tensors = p.layout.tensors();
  if (ntensors != tensors.size()) throw DataError(where + "unexpected tensor count");
  for (const auto& t : tensors) {
    std::uint32_t r, c;
    if (!read_u32(in, r) || !read_u32(in, c)) throw DataError(where + "truncated header");
    if (int(r) != t.rows || int(c) != t.cols) throw DataError(where + "layer dimensions inconsistent with encoding");
  }
  std::uint64_t count;
  if (!read_u64(in, count)) throw DataError(where + "truncated header");
  if (count != p.layout.size) throw DataError(where + "parameter count inconsistent with layer dimensions");
  p.values.resize(count);
  for (auto& v : p.values) {
    if (!read_f64(in, v)) throw DataError(where + "truncated payload");
  }
  if (!p.all_finite()) throw DataError(where + "non-finite parameters");
  return p;
}

}  // namespace sylva
