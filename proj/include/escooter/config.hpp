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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "escooter/annotation.hpp"
#include "escooter/pipeline.hpp"
#include "escooter/synthesizer.hpp"
#include "json.hpp"

namespace escooter {

inline constexpr std::string_view kConfigEnvVar = "ESCOOTER_CONFIG";

// Every tunable the CLI exposes. Serialized as nested JSON; any leaf can be
// overridden with a dotted key, e.g. pipeline.expansion.k_occluded=0.9.
struct ToolkitConfig {
  PipelineConfig pipeline;
  double iou_threshold = 0.5;
  // Empty = toolkit default table.
  std::string weights_path;
  PartMode part_mode = PartMode::kFractional;
  // Stored vs recomputed occlusion gap that counts as drift.
  double drift_tolerance_pp = 0.5;
  SearchPolicy policy = SearchPolicy::kGridBisect;
  int max_attempts = 384;
  double min_scale = 0.5;
  double max_scale = 1.5;

  void validate() const;
};

nlohmann::json to_json(const ToolkitConfig& cfg);

// Unknown keys and type changes throw kInvalidConfig; missing keys keep
// their defaults.
ToolkitConfig config_from_json(const nlohmann::json& j);

// `assignment` is key=value. The value is read as JSON when it parses,
// otherwise as a bare string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Defaults, then the file (explicit path or $ESCOOTER_CONFIG), then
// overrides in order.
ToolkitConfig resolve_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides);

std::string dump_config(const ToolkitConfig& cfg);
std::string config_hash(const ToolkitConfig& cfg);

PartWeightTable weights_for(const ToolkitConfig& cfg);

}  // namespace escooter
