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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "escooter/domain.hpp"
#include "escooter/image.hpp"

namespace escooter {

inline constexpr int kNumParts = 6;

enum class PartId : int {
  kHead = 0,
  kTorso = 1,
  kLeftArm = 2,
  kRightArm = 3,
  kLeftLeg = 4,
  kRightLeg = 5,
};

std::string_view part_name(PartId part);
PartId parse_part(std::string_view name);

struct SemanticPart {
  PartId id;
  std::vector<int> keypoint_indices;
};

using Skeleton = std::vector<SemanticPart>;

// The 17-keypoint COCO person layout grouped into six parts:
//   head      nose, eyes, ears           (0-4)
//   torso     shoulders, hips            (5, 6, 11, 12)
//   left arm  left elbow, left wrist     (7, 9)
//   right arm right elbow, right wrist   (8, 10)
//   left leg  left knee, left ankle      (13, 15)
//   right leg right knee, right ankle    (14, 16)
const Skeleton& coco17_skeleton();
inline constexpr int kCoco17Keypoints = 17;

// Percent of 2D body surface per part. Must sum to 100.
struct PartWeightTable {
  std::array<double, kNumParts> weights{};

  double weight(PartId p) const { return weights[static_cast<int>(p)]; }

  // Rule-of-nines values: head 9, arms 9 each, legs 18 each, torso 36 with
  // the residual 1 folded in (37). This is the toolkit default, not a
  // published adapted table.
  static PartWeightTable toolkit_default();

  // Throws kWeightTableInvalid on negative weights or a sum other than 100.
  void validate() const;

  friend bool operator==(const PartWeightTable&, const PartWeightTable&) = default;
};

// Flat {"head": 9, "torso": 37, ...} document; all six parts required.
PartWeightTable parse_weight_table(std::string_view json);
PartWeightTable load_weight_table(const std::filesystem::path& path);
std::string serialize_weight_table(const PartWeightTable& table);

struct PartVisibility {
  PartId part;
  double visible_fraction = 0.0;
};

enum class PartMode {
  kFractional,
  // A part counts as fully visible when at least half of its labeled
  // keypoints are visible, otherwise fully occluded.
  kBinary,
};

// Keypoint route. A labeled_visible keypoint is demoted to occluded when a
// mask is supplied and no mask pixel is set within one pixel of it.
// Throws kSkeletonMismatch when the keypoint count does not fit the skeleton.
std::vector<PartVisibility> infer_part_visibility(std::span<const Keypoint> keypoints,
                                                  const Skeleton& skeleton,
                                                  const GrayImage* mask = nullptr,
                                                  PartMode mode = PartMode::kFractional);

// Part-map encoding: 0 background, (part + 1) for a visible part pixel,
// (part + 1) | kPartOccludedBit for the same pixel after occlusion.
inline constexpr std::uint8_t kPartOccludedBit = 0x80;

inline std::uint8_t part_code(PartId p) { return static_cast<std::uint8_t>(static_cast<int>(p) + 1); }

// Dense route: visible_fraction = visible part pixels / all part pixels.
// Parts with no pixels get 0.
std::vector<PartVisibility> part_visibility_from_part_map(const GrayImage& part_map,
                                                          PartMode mode = PartMode::kFractional);

// sum over parts of weight * (1 - visible_fraction). Throws kMissingPart
// unless every part appears exactly once, kWeightTableInvalid for a bad table.
double occlusion_level(std::span<const PartVisibility> parts, const PartWeightTable& weights);

// floor(pct / 10) for 0 <= pct < 100; throws kOutOfRange otherwise.
int bin_of(double pct);

}  // namespace escooter
