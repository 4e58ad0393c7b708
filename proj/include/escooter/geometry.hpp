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

#include "escooter/domain.hpp"

namespace escooter {

// Candidate expansion parameters. Defaults reproduce the fixed three-side
// expansion (x - w, y, 3w, h + h/4) for boxes that are not gated.
struct ExpansionConfig {
  double aspect_gate_threshold = 2.5;
  // Fraction of h added below the box when the gate does not fire.
  double k_upright = 0.25;
  // Fraction of h added below the box when the gate fires.
  double k_occluded = 0.75;
  double lateral_factor = 3.0;

  // threshold > 0, k_occluded > k_upright >= 0, lateral_factor >= 1.
  void validate() const;

  friend bool operator==(const ExpansionConfig&, const ExpansionConfig&) = default;
};

// (x - w, y, 3w, h + h/4), unclipped.
BBox expand_baseline(const BBox& b);

// True iff h < threshold * w (strict). Wide or squat person boxes are
// likely truncated by an occluder.
bool aspect_gate(const BBox& b, const ExpansionConfig& cfg);

// Centered lateral growth to lateral_factor * w and downward growth of
// k * h, k picked by the gate. Top edge is fixed.
BBox expand_occlusion_aware(const BBox& b, const ExpansionConfig& cfg);

// Intersection with [0,width] x [0,height]. Throws kNoOverlap when empty.
BBox clip_to_image(const BBox& b, double width, double height);

double iou(const BBox& a, const BBox& b);

struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

// Integer crop bounds; both edges rounded half away from zero.
// Throws kDegenerateCrop when the rounded area is zero.
PixelRect to_pixel_rect(const BBox& clipped);

}  // namespace escooter
