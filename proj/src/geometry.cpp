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

#include "escooter/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "escooter/error.hpp"

namespace escooter {

void ExpansionConfig::validate() const {
  if (!(aspect_gate_threshold > 0.0) || !std::isfinite(aspect_gate_threshold)) {
    throw Error(ErrorCode::kInvalidConfig, "aspect_gate_threshold must be > 0");
  }
  if (!(k_upright >= 0.0) || !(k_occluded > k_upright) || !std::isfinite(k_occluded)) {
    throw Error(ErrorCode::kInvalidConfig, "expected k_occluded > k_upright >= 0");
  }
  if (!(lateral_factor >= 1.0) || !std::isfinite(lateral_factor)) {
    throw Error(ErrorCode::kInvalidConfig, "lateral_factor must be >= 1");
  }
}

BBox expand_baseline(const BBox& b) {
  return BBox{b.x - b.w, b.y, 3.0 * b.w, b.h + b.h / 4.0};
}

bool aspect_gate(const BBox& b, const ExpansionConfig& cfg) {
  return b.h < cfg.aspect_gate_threshold * b.w;
}

BBox expand_occlusion_aware(const BBox& b, const ExpansionConfig& cfg) {
  const double k = aspect_gate(b, cfg) ? cfg.k_occluded : cfg.k_upright;
  const double side = (cfg.lateral_factor - 1.0) / 2.0;
  return BBox{b.x - side * b.w, b.y, cfg.lateral_factor * b.w, b.h + k * b.h};
}

BBox clip_to_image(const BBox& b, double width, double height) {
  const double x0 = std::max(b.x, 0.0);
  const double y0 = std::max(b.y, 0.0);
  const double x1 = std::min(b.right(), width);
  const double y1 = std::min(b.bottom(), height);
  if (!(x1 > x0) || !(y1 > y0)) {
    throw Error(ErrorCode::kNoOverlap, "box does not overlap the image");
  }
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

PixelRect to_pixel_rect(const BBox& clipped) {
  // std::round rounds halfway cases away from zero.
  const long x0 = std::lround(clipped.x);
  const long y0 = std::lround(clipped.y);
  const long x1 = std::lround(clipped.right());
  const long y1 = std::lround(clipped.bottom());
  if (x1 <= x0 || y1 <= y0) {
    throw Error(ErrorCode::kDegenerateCrop, "crop rounds to zero area");
  }
  return PixelRect{static_cast<int>(x0), static_cast<int>(y0),
                   static_cast<int>(x1 - x0), static_cast<int>(y1 - y0)};
}

}  // namespace escooter
