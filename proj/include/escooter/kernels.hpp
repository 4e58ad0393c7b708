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

// Data-parallel inner loops. Every kernel has a serial reference used by the
// tests and the benchmark; the dispatching entry point picks the OpenMP
// variant above a size cutoff. Both variants must produce identical results.

#include <omp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>

#include "escooter/domain.hpp"
#include "escooter/geometry.hpp"
#include "escooter/image.hpp"

namespace escooter::kernels {

inline constexpr std::size_t kParallelCutoff = 1 << 16;

// Per-part pixel totals and occluded counts of a part map.
struct PartHistogram {
  std::array<std::int64_t, 6> total{};
  std::array<std::int64_t, 6> occluded{};

  friend bool operator==(const PartHistogram&, const PartHistogram&) = default;
};

inline void accumulate_code(std::uint8_t code, std::int64_t* total, std::int64_t* occluded) {
  const int part = (code & 0x7F) - 1;
  if (part < 0 || part >= 6) return;
  ++total[part];
  if (code & 0x80) ++occluded[part];
}

inline PartHistogram part_histogram_serial(std::span<const std::uint8_t> codes) {
  PartHistogram h;
  for (const std::uint8_t c : codes) accumulate_code(c, h.total.data(), h.occluded.data());
  return h;
}

inline PartHistogram part_histogram_omp(std::span<const std::uint8_t> codes) {
  PartHistogram h;
  const std::int64_t n = static_cast<std::int64_t>(codes.size());
  const std::uint8_t* data = codes.data();
#pragma omp parallel
  {
    PartHistogram local;
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) accumulate_code(data[i], local.total.data(), local.occluded.data());
    // Integer sums, so merge order does not matter.
#pragma omp critical(escooter_part_histogram)
    for (int p = 0; p < 6; ++p) {
      h.total[p] += local.total[p];
      h.occluded[p] += local.occluded[p];
    }
  }
  return h;
}

inline PartHistogram part_histogram(std::span<const std::uint8_t> codes) {
  return codes.size() >= kParallelCutoff ? part_histogram_omp(codes)
                                         : part_histogram_serial(codes);
}

// Pixels of `part_map` that an opaque occluder footprint at (ox, oy) would
// newly cover, per part. Already-occluded pixels are not counted again.
inline PartHistogram covered_by_serial(const GrayImage& part_map, const RgbaImage& occ, int ox,
                                       int oy) {
  PartHistogram h;
  const int x0 = std::max(0, ox), y0 = std::max(0, oy);
  const int x1 = std::min(part_map.width(), ox + occ.width());
  const int y1 = std::min(part_map.height(), oy + occ.height());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::uint8_t code = part_map.at(x, y);
      if (code == 0 || (code & 0x80)) continue;
      const int part = (code & 0x7F) - 1;
      if (part >= 6 || occ.at(x - ox, y - oy).a < kAlphaOpaque) continue;
      ++h.occluded[part];
    }
  }
  return h;
}

inline PartHistogram covered_by_omp(const GrayImage& part_map, const RgbaImage& occ, int ox,
                                    int oy) {
  const int x0 = std::max(0, ox), y0 = std::max(0, oy);
  const int x1 = std::min(part_map.width(), ox + occ.width());
  const int y1 = std::min(part_map.height(), oy + occ.height());
  std::int64_t o0 = 0, o1 = 0, o2 = 0, o3 = 0, o4 = 0, o5 = 0;
#pragma omp parallel for reduction(+ : o0, o1, o2, o3, o4, o5) schedule(static)
  for (int y = y0; y < y1; ++y) {
    std::int64_t o[6] = {0, 0, 0, 0, 0, 0};
    for (int x = x0; x < x1; ++x) {
      const std::uint8_t code = part_map.at(x, y);
      if (code == 0 || (code & 0x80)) continue;
      const int part = (code & 0x7F) - 1;
      if (part >= 6 || occ.at(x - ox, y - oy).a < kAlphaOpaque) continue;
      ++o[part];
    }
    o0 += o[0]; o1 += o[1]; o2 += o[2]; o3 += o[3]; o4 += o[4]; o5 += o[5];
  }
  PartHistogram h;
  h.occluded = {o0, o1, o2, o3, o4, o5};
  return h;
}

inline PartHistogram covered_by(const GrayImage& part_map, const RgbaImage& occ, int ox, int oy) {
  const std::size_t area = static_cast<std::size_t>(occ.width()) * occ.height();
  return area >= kParallelCutoff ? covered_by_omp(part_map, occ, ox, oy)
                                 : covered_by_serial(part_map, occ, ox, oy);
}

// Blend `occ` over `dst` at (ox, oy). Pixels with zero alpha are untouched.
// Pixels at or above kAlphaOpaque mark the part map occluded and clear the
// instance mask.
inline void blend_row(RgbaImage& dst, const RgbaImage& occ, int ox, int oy, int y, int x0, int x1,
                      GrayImage* part_map, GrayImage* mask) {
  for (int x = x0; x < x1; ++x) {
    const Rgba s = occ.at(x - ox, y - oy);
    if (s.a == 0) continue;
    Rgba& d = dst.at(x, y);
    const unsigned a = s.a;
    const unsigned ia = 255u - a;
    d.r = static_cast<std::uint8_t>((s.r * a + d.r * ia + 127u) / 255u);
    d.g = static_cast<std::uint8_t>((s.g * a + d.g * ia + 127u) / 255u);
    d.b = static_cast<std::uint8_t>((s.b * a + d.b * ia + 127u) / 255u);
    d.a = static_cast<std::uint8_t>(a + (d.a * ia + 127u) / 255u);
    if (a >= kAlphaOpaque) {
      if (part_map != nullptr && part_map->at(x, y) != 0) part_map->at(x, y) |= 0x80;
      if (mask != nullptr) mask->at(x, y) = 0;
    }
  }
}

inline void composite_serial(RgbaImage& dst, const RgbaImage& occ, int ox, int oy,
                             GrayImage* part_map, GrayImage* mask) {
  const int x0 = std::max(0, ox), y0 = std::max(0, oy);
  const int x1 = std::min(dst.width(), ox + occ.width());
  const int y1 = std::min(dst.height(), oy + occ.height());
  for (int y = y0; y < y1; ++y) blend_row(dst, occ, ox, oy, y, x0, x1, part_map, mask);
}

inline void composite_omp(RgbaImage& dst, const RgbaImage& occ, int ox, int oy,
                          GrayImage* part_map, GrayImage* mask) {
  const int x0 = std::max(0, ox), y0 = std::max(0, oy);
  const int x1 = std::min(dst.width(), ox + occ.width());
  const int y1 = std::min(dst.height(), oy + occ.height());
#pragma omp parallel for schedule(static)
  for (int y = y0; y < y1; ++y) blend_row(dst, occ, ox, oy, y, x0, x1, part_map, mask);
}

inline void composite(RgbaImage& dst, const RgbaImage& occ, int ox, int oy, GrayImage* part_map,
                      GrayImage* mask) {
  const std::size_t area = static_cast<std::size_t>(occ.width()) * occ.height();
  if (area >= kParallelCutoff) {
    composite_omp(dst, occ, ox, oy, part_map, mask);
  } else {
    composite_serial(dst, occ, ox, oy, part_map, mask);
  }
}

// out[i * b.size() + j] = iou(a[i], b[j]).
inline void iou_matrix_serial(std::span<const BBox> a, std::span<const BBox> b,
                              std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = iou(a[i], b[j]);
  }
}

inline void iou_matrix_omp(std::span<const BBox> a, std::span<const BBox> b,
                           std::span<double> out) {
  const std::int64_t n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = iou(a[i], b[j]);
  }
}

inline void iou_matrix(std::span<const BBox> a, std::span<const BBox> b, std::span<double> out) {
  if (a.size() * b.size() >= 4096) {
    iou_matrix_omp(a, b, out);
  } else {
    iou_matrix_serial(a, b, out);
  }
}

// Set pixels of a mask.
inline std::int64_t count_set_serial(std::span<const std::uint8_t> mask) {
  std::int64_t n = 0;
  for (const std::uint8_t v : mask) n += (v != 0);
  return n;
}

inline std::int64_t count_set_omp(std::span<const std::uint8_t> mask) {
  std::int64_t n = 0;
  const std::int64_t size = static_cast<std::int64_t>(mask.size());
  const std::uint8_t* data = mask.data();
#pragma omp parallel for reduction(+ : n) schedule(static)
  for (std::int64_t i = 0; i < size; ++i) n += (data[i] != 0);
  return n;
}

}  // namespace escooter::kernels
