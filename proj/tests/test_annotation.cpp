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

#include <gtest/gtest.h>

#include <vector>

#include "escooter/annotation.hpp"
#include "escooter/error.hpp"

namespace escooter {
namespace {

std::vector<Keypoint> all_keypoints(Visibility v) {
  std::vector<Keypoint> kps;
  for (int i = 0; i < kCoco17Keypoints; ++i) kps.push_back({4.0 + 3 * i, 4.0 + 3 * i, v});
  return kps;
}

double level_of(const std::vector<Keypoint>& kps, PartMode mode = PartMode::kFractional) {
  return occlusion_level(infer_part_visibility(kps, coco17_skeleton(), nullptr, mode),
                         PartWeightTable::toolkit_default());
}

TEST(Weights, DefaultTableSumsToHundred) {
  const auto t = PartWeightTable::toolkit_default();
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(t.weight(PartId::kHead), 9);
  EXPECT_EQ(t.weight(PartId::kTorso), 37);
  EXPECT_EQ(t.weight(PartId::kLeftLeg), 18);
}

TEST(Weights, ParseRequiresEveryPartAndSumOfHundred) {
  const std::string good = serialize_weight_table(PartWeightTable::toolkit_default());
  EXPECT_EQ(parse_weight_table(good), PartWeightTable::toolkit_default());
  EXPECT_THROW(parse_weight_table(R"({"head": 100})"), Error);
  try {
    parse_weight_table(
        R"({"head": 10, "torso": 37, "left_arm": 9, "right_arm": 9, "left_leg": 18, "right_leg": 18})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWeightTableInvalid);
  }
}

TEST(Occlusion, AllVisibleIsZeroAllOccludedIsHundred) {
  EXPECT_DOUBLE_EQ(level_of(all_keypoints(Visibility::kLabeledVisible)), 0.0);
  EXPECT_DOUBLE_EQ(level_of(all_keypoints(Visibility::kLabeledOccluded)), 100.0);
  EXPECT_THROW(bin_of(level_of(all_keypoints(Visibility::kLabeledOccluded))), Error);
}

TEST(Occlusion, HeadOnlyOccludedGivesHeadWeight) {
  auto kps = all_keypoints(Visibility::kLabeledVisible);
  for (int i = 0; i < 5; ++i) kps[i].v = Visibility::kLabeledOccluded;
  EXPECT_DOUBLE_EQ(level_of(kps), 9.0);
  EXPECT_EQ(bin_of(level_of(kps)), 0);
}

TEST(Occlusion, FractionalVersusBinaryParts) {
  auto kps = all_keypoints(Visibility::kLabeledVisible);
  kps[15].v = Visibility::kLabeledOccluded;  // left ankle: half the left leg
  EXPECT_DOUBLE_EQ(level_of(kps, PartMode::kFractional), 9.0);
  // Half visible still counts as visible in binary mode.
  EXPECT_DOUBLE_EQ(level_of(kps, PartMode::kBinary), 0.0);
  kps[13].v = Visibility::kLabeledOccluded;
  EXPECT_DOUBLE_EQ(level_of(kps, PartMode::kBinary), 18.0);
}

TEST(Occlusion, MaskDemotesUnsupportedKeypoints) {
  auto kps = all_keypoints(Visibility::kLabeledVisible);
  GrayImage mask(64, 64, 0);
  // Only the head keypoints (0-4) sit on set mask pixels.
  for (int i = 0; i < 5; ++i) mask.at(static_cast<int>(kps[i].x), static_cast<int>(kps[i].y)) = 255;
  EXPECT_DOUBLE_EQ(
      occlusion_level(infer_part_visibility(kps, coco17_skeleton(), &mask), PartWeightTable::toolkit_default()),
      91.0);
}

TEST(Occlusion, SkeletonMismatchOnWrongKeypointCount) {
  std::vector<Keypoint> kps(16);
  try {
    infer_part_visibility(kps, coco17_skeleton());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSkeletonMismatch);
  }
}

TEST(Occlusion, MissingOrDuplicatePartRejected) {
  std::vector<PartVisibility> parts;
  for (int p = 0; p < kNumParts - 1; ++p) parts.push_back({static_cast<PartId>(p), 1.0});
  EXPECT_THROW(occlusion_level(parts, PartWeightTable::toolkit_default()), Error);
  parts.push_back({PartId::kHead, 1.0});
  EXPECT_THROW(occlusion_level(parts, PartWeightTable::toolkit_default()), Error);
}

TEST(Occlusion, PartMapRoute) {
  GrayImage map(10, 10, 0);
  // Torso: 10 pixels, 4 of them occluded. Every other part fully visible.
  for (int x = 0; x < 10; ++x) map.at(x, 0) = part_code(PartId::kTorso) | (x < 4 ? kPartOccludedBit : 0);
  for (int p = 0; p < kNumParts; ++p) {
    if (static_cast<PartId>(p) != PartId::kTorso) map.at(p, 5) = part_code(static_cast<PartId>(p));
  }
  const auto parts = part_visibility_from_part_map(map);
  EXPECT_DOUBLE_EQ(occlusion_level(parts, PartWeightTable::toolkit_default()), 37.0 * 0.4);
  EXPECT_DOUBLE_EQ(occlusion_level(part_visibility_from_part_map(map, PartMode::kBinary),
                                   PartWeightTable::toolkit_default()),
                   0.0);
}

TEST(Occlusion, LevelIsMonotoneInOccludedKeypoints) {
  auto kps = all_keypoints(Visibility::kLabeledVisible);
  double prev = level_of(kps);
  for (int i = 0; i < kCoco17Keypoints; ++i) {
    kps[i].v = Visibility::kLabeledOccluded;
    const double now = level_of(kps);
    EXPECT_GE(now, prev);
    EXPECT_LE(now, 100.0);
    prev = now;
  }
}

TEST(Bins, BoundaryTable) {
  EXPECT_EQ(bin_of(0.0), 0);
  EXPECT_EQ(bin_of(9.99), 0);
  EXPECT_EQ(bin_of(10.0), 1);
  EXPECT_EQ(bin_of(95.0), 9);
  EXPECT_EQ(bin_of(99.999), 9);
  try {
    bin_of(100.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
  EXPECT_THROW(bin_of(-0.1), Error);
}

}  // namespace
}  // namespace escooter
