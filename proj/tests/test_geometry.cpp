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

#include <random>

#include "escooter/error.hpp"
#include "escooter/geometry.hpp"
#include "oracles.hpp"

namespace escooter {
namespace {

TEST(Expansion, FixedExpansionOnAKnownBox) {
  const BBox e = expand_baseline(BBox{10, 20, 30, 40});
  EXPECT_EQ(e, (BBox{-20, 20, 90, 50}));
}

TEST(Expansion, FixedExpansionMatchesOracleBitForBit) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    const BBox b = oracle::random_box(rng, 2000.0);
    EXPECT_EQ(expand_baseline(b), oracle::expand_fixed(b));
  }
}

TEST(Gate, StrictInequality) {
  ExpansionConfig cfg;
  EXPECT_FALSE(aspect_gate(BBox{0, 0, 10, 25}, cfg));  // h == 2.5w
  EXPECT_TRUE(aspect_gate(BBox{0, 0, 10, 24.999}, cfg));
  EXPECT_FALSE(aspect_gate(BBox{0, 0, 10, 40}, cfg));
}

TEST(Gate, OcclusionAwareEqualsFixedWhenNotGated) {
  std::mt19937_64 rng(5);
  ExpansionConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    BBox b = oracle::random_box(rng, 500.0);
    b.h = b.w * (2.5 + oracle::uniform(rng, 0.0, 3.0));
    ASSERT_FALSE(aspect_gate(b, cfg));
    EXPECT_EQ(expand_occlusion_aware(b, cfg), expand_baseline(b));
  }
}

TEST(Gate, GatedBoxesGrowFurtherDown) {
  ExpansionConfig cfg;
  const BBox b{5, 5, 40, 30};
  ASSERT_TRUE(aspect_gate(b, cfg));
  const BBox oa = expand_occlusion_aware(b, cfg);
  const BBox fixed = expand_baseline(b);
  EXPECT_GT(oa.h, fixed.h);
  EXPECT_DOUBLE_EQ(oa.h, 30 + 0.75 * 30);
  EXPECT_EQ(oa.x, fixed.x);
  EXPECT_EQ(oa.w, fixed.w);
  EXPECT_EQ(oa.y, b.y);
}

TEST(Expansion, ConfigValidation) {
  ExpansionConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.k_occluded = 0.1;  // below k_upright
  EXPECT_THROW(cfg.validate(), Error);
  cfg = ExpansionConfig{};
  cfg.aspect_gate_threshold = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Clip, IntersectsWithImage) {
  EXPECT_EQ(clip_to_image(BBox{-20, 20, 90, 50}, 64, 48), (BBox{0, 20, 64, 28}));
  try {
    clip_to_image(BBox{100, 100, 5, 5}, 64, 48);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoOverlap);
  }
}

TEST(Clip, IdempotentOnQuarterPixelGrid) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto q = [&](double lo, double hi) { return std::round(oracle::uniform(rng, lo, hi) * 4) / 4; };
    const BBox b{q(-50, 80), q(-50, 80), q(1, 60), q(1, 60)};
    try {
      const BBox c = clip_to_image(b, 64, 64);
      EXPECT_EQ(clip_to_image(c, 64, 64), c);
      EXPECT_GE(c.x, 0);
      EXPECT_LE(c.right(), 64);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNoOverlap);
    }
  }
}

TEST(Iou, KnownValuesAndOracle) {
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 10, 10}, BBox{0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 10, 10}, BBox{5, 0, 10, 10}), 50.0 / 150.0);
  EXPECT_DOUBLE_EQ(iou(BBox{0, 0, 10, 10}, BBox{20, 20, 1, 1}), 0.0);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 2000; ++i) {
    const BBox a = oracle::random_box(rng);
    const BBox b = oracle::random_box(rng);
    EXPECT_NEAR(iou(a, b), oracle::iou(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(iou(a, b), iou(b, a));
  }
}

TEST(PixelRect, RoundsHalfAwayFromZero) {
  EXPECT_EQ(to_pixel_rect(BBox{0.5, 1.49, 10.0, 10.0}), (PixelRect{1, 1, 10, 10}));
  EXPECT_EQ(to_pixel_rect(BBox{2.5, 0.0, 1.0, 2.5}), (PixelRect{3, 0, 1, 3}));
  try {
    to_pixel_rect(BBox{1.6, 0, 0.3, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCrop);
  }
}

}  // namespace
}  // namespace escooter
