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
#include <stdlib.h>

#include "escooter/config.hpp"
#include "escooter/error.hpp"
#include "test_util.hpp"

namespace escooter {
namespace {

using nlohmann::json;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

TEST(Config, DefaultsDumpAndReload) {
  const ToolkitConfig d;
  const ToolkitConfig back = config_from_json(json::parse(dump_config(d)));
  EXPECT_EQ(dump_config(back), dump_config(d));
  EXPECT_EQ(back.pipeline.expansion.aspect_gate_threshold, 2.5);
  EXPECT_EQ(back.iou_threshold, 0.5);
  EXPECT_EQ(config_hash(back), config_hash(d));
}

TEST(Config, DottedOverrides) {
  const ToolkitConfig c = resolve_config(std::nullopt, {"pipeline.mode=baseline", "pipeline.expansion.k_occluded=0.9",
                                                        "evaluation.iou_threshold=0.3", "synthesis.max_attempts=10"});
  EXPECT_EQ(c.pipeline.mode, PipelineMode::kBaseline);
  EXPECT_EQ(c.pipeline.expansion.k_occluded, 0.9);
  EXPECT_EQ(c.iou_threshold, 0.3);
  EXPECT_EQ(c.max_attempts, 10);
  EXPECT_NE(config_hash(c), config_hash(ToolkitConfig{}));
}

TEST(Config, BadOverridesAreInvalidConfig) {
  EXPECT_EQ(code_of([] { resolve_config(std::nullopt, {"pipeline.nope=1"}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { resolve_config(std::nullopt, {"pipeline.score_floor=high"}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { resolve_config(std::nullopt, {"pipeline=1"}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { resolve_config(std::nullopt, {"novalue"}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { resolve_config(std::nullopt, {"pipeline.mode=fancy"}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(code_of([] { resolve_config(std::nullopt, {"pipeline.expansion.k_occluded=0.1"}); }),
            ErrorCode::kInvalidConfig);
}

TEST(Config, FileLayerThenOverrides) {
  testutil::TempDir dir;
  write_file(dir / "c.json", R"({"pipeline": {"score_floor": 0.25}, "evaluation": {"iou_threshold": 0.7}})");
  const ToolkitConfig c = resolve_config(dir / "c.json", {"evaluation.iou_threshold=0.6"});
  EXPECT_EQ(c.pipeline.score_floor, 0.25);
  EXPECT_EQ(c.iou_threshold, 0.6);
  EXPECT_EQ(c.pipeline.decision_threshold, 0.5);

  write_file(dir / "bad.json", R"({"pipeline": {"scor_floor": 0.25}})");
  EXPECT_EQ(code_of([&] { resolve_config(dir / "bad.json", {}); }), ErrorCode::kInvalidConfig);
  write_file(dir / "type.json", R"({"pipeline": {"workers": "four"}})");
  EXPECT_EQ(code_of([&] { resolve_config(dir / "type.json", {}); }), ErrorCode::kInvalidConfig);
  write_file(dir / "junk.json", "{");
  EXPECT_EQ(code_of([&] { resolve_config(dir / "junk.json", {}); }), ErrorCode::kInvalidConfig);
}

TEST(Config, EnvironmentVariableSuppliesTheDefaultFile) {
  testutil::TempDir dir;
  write_file(dir / "env.json", R"({"synthesis": {"policy": "random"}})");
  ::setenv(std::string(kConfigEnvVar).c_str(), (dir / "env.json").c_str(), 1);
  const ToolkitConfig c = resolve_config(std::nullopt, {});
  ::unsetenv(std::string(kConfigEnvVar).c_str());
  EXPECT_EQ(c.policy, SearchPolicy::kRandom);
  EXPECT_EQ(resolve_config(std::nullopt, {}).policy, SearchPolicy::kGridBisect);
}

TEST(Config, WeightsFromFile) {
  testutil::TempDir dir;
  write_file(dir / "w.json", R"({"head": 10, "torso": 36, "left_arm": 9, "right_arm": 9, "left_leg": 18, "right_leg": 18})");
  ToolkitConfig c;
  c.weights_path = (dir / "w.json").string();
  EXPECT_EQ(weights_for(c).weight(PartId::kHead), 10);
  EXPECT_EQ(weights_for(ToolkitConfig{}), PartWeightTable::toolkit_default());
}

}  // namespace
}  // namespace escooter
