// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#include "sylva/image.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "byte_io.hpp"
#include "sylva/error.hpp"

namespace sylva {

namespace {

std::uint8_t to_byte(double c) {
  const double v = std::round(std::clamp(c, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(v);
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_positive(const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(what + ": bad header value '" + tok + "'");
  }
}

}  // namespace

void save_ppm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image: " + path.string());
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<std::uint8_t> row(std::size_t(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Vec3& c = img.at(x, y);
      for (int k = 0; k < 3; ++k) row[3 * x + k] = to_byte(c[k]);
    }
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path.string());
  if (next_token(in) != "P6") throw DataError(path.string() + ": not a binary PPM (P6)");
  const int w = parse_positive(next_token(in), path.string());
  const int h = parse_positive(next_token(in), path.string());
  if (next_token(in) != "255") throw DataError(path.string() + ": only maxval 255 is supported");
  Image img(w, h);
  std::vector<std::uint8_t> buf(std::size_t(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
  if (in.gcount() != std::streamsize(buf.size())) throw DataError(path.string() + ": truncated pixel data");
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = Vec3(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]) / 255.0;
  }
  return img;
}

void save_pfm(const Raster& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write raster: " + path.string());
  out << "Pf\n" << r.width << ' ' << r.height << "\n-1.0\n";
  for (int y = r.height - 1; y >= 0; --y) {
    for (int x = 0; x < r.width; ++x) byte_io::write_f32(out, static_cast<float>(r.at(x, y)));
  }
}

Raster load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open raster: " + path.string());
  std::string magic, dims, scale;
  std::getline(in, magic);
  std::getline(in, dims);
  std::getline(in, scale);
  if (magic != "Pf") throw DataError(path.string() + ": not a single-channel PFM");
  std::istringstream ds(dims);
  std::string ws, hs;
  ds >> ws >> hs;
  const int w = parse_positive(ws, path.string());
  const int h = parse_positive(hs, path.string());
  if (scale.empty() || scale[0] != '-') throw DataError(path.string() + ": only little-endian PFM is supported");
  Raster r(w, h);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      float v;
      if (!byte_io::read_f32(in, v)) throw DataError(path.string() + ": truncated raster data");
      r.at(x, y) = v;
    }
  }
  return r;
}

Image quantize8(const Image& img) {
  Image out = img;
  for (auto& p : out.pixels) {
    for (int k = 0; k < 3; ++k) p[k] = to_byte(p[k]) / 255.0;
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw DataError("psnr: image size mismatch");
  double se = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) se += (a.pixels[i] - b.pixels[i]).squaredNorm();
  const double mse = se / (3.0 * double(a.pixels.size()));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace sylva
