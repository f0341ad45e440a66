// Copyright 2026 The Sylva Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "sylva/geometry.hpp"

namespace sylva {

/// Row-major RGB image with components in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;

  Image() = default;
  Image(int w, int h, const Vec3& fill = Vec3::Zero()) : width(w), height(h), pixels(std::size_t(w) * h, fill) {}

  Vec3& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
};

/// Row-major single channel raster (depth, depth std).
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Raster() = default;
  Raster(int w, int h, double fill = 0.0) : width(w), height(h), values(std::size_t(w) * h, fill) {}

  double& at(int x, int y) { return values[std::size_t(y) * width + x]; }
  double at(int x, int y) const { return values[std::size_t(y) * width + x]; }
};

/// Binary PPM (P6, maxval 255). Components are rounded to the nearest 8-bit level.
void save_ppm(const Image& img, const std::filesystem::path& path);
Image load_ppm(const std::filesystem::path& path);

/// Portable float map ("Pf", little-endian, rows stored bottom-to-top), 32-bit.
void save_pfm(const Raster& r, const std::filesystem::path& path);
Raster load_pfm(const std::filesystem::path& path);

/// Image quantized to 8-bit levels, as it would be after a PPM round trip.
Image quantize8(const Image& img);

/// Peak signal-to-noise ratio over all channels, peak 1.
double psnr(const Image& a, const Image& b);

}  // namespace sylva
