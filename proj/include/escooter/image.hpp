// Copyright 2026 The escooter-occlusion Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "escooter/geometry.hpp"

namespace escooter {

struct Rgba {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  std::uint8_t a = 0;

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

// Row-major pixel buffer.
template <typename Pixel>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, Pixel fill = Pixel{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  Pixel& at(int x, int y) { return data_[index(x, y)]; }
  const Pixel& at(int x, int y) const { return data_[index(x, y)]; }

  std::vector<Pixel>& data() { return data_; }
  const std::vector<Pixel>& data() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> data_;
};

using RgbaImage = Raster<Rgba>;
// Single channel; used for instance masks (nonzero = set) and part maps.
using GrayImage = Raster<std::uint8_t>;

// Alpha at or above this value counts as occluding.
inline constexpr std::uint8_t kAlphaOpaque = 128;

RgbaImage read_png_rgba(const std::filesystem::path& path);
GrayImage read_png_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbaImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

template <typename Pixel>
Raster<Pixel> crop_pixels(const Raster<Pixel>& src, const PixelRect& r) {
  Raster<Pixel> out(r.w, r.h);
  for (int y = 0; y < r.h; ++y) {
    for (int x = 0; x < r.w; ++x) out.at(x, y) = src.at(r.x + x, r.y + y);
  }
  return out;
}

// Nearest-neighbour resampling; output size is round(w * scale) x
// round(h * scale), at least 1x1.
RgbaImage resample_nearest(const RgbaImage& src, double scale);

}  // namespace escooter
