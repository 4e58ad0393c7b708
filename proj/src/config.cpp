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

#include "escooter/config.hpp"

#include <cstdlib>

#include "escooter/error.hpp"

namespace escooter {

using nlohmann::json;

namespace {

std::string_view part_mode_name(PartMode m) { return m == PartMode::kBinary ? "binary" : "fractional"; }

PartMode parse_part_mode(std::string_view s) {
  if (s == "binary") return PartMode::kBinary;
  if (s == "fractional") return PartMode::kFractional;
  throw Error(ErrorCode::kInvalidConfig, "part_mode must be 'fractional' or 'binary'");
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Overlays `patch` onto `base`, refusing keys `base` lacks.
void overlay(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw Error(ErrorCode::kInvalidConfig, "config section '" + where + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, path);
    } else {
      if (!same_kind(slot, value)) {
        throw Error(ErrorCode::kInvalidConfig, "config key '" + path + "' has the wrong type");
      }
      slot = value;
    }
  }
}

}  // namespace

void ToolkitConfig::validate() const {
  pipeline.validate();
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "evaluation.iou_threshold must be in (0, 1]");
  }
  if (!(drift_tolerance_pp >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "drift tolerance must be >= 0");
  if (max_attempts <= 0) throw Error(ErrorCode::kInvalidConfig, "synthesis.max_attempts must be positive");
  if (!(min_scale > 0.0 && min_scale <= max_scale)) {
    throw Error(ErrorCode::kInvalidConfig, "synthesis scales need 0 < min_scale <= max_scale");
  }
}

json to_json(const ToolkitConfig& cfg) {
  return json{{"pipeline", to_json(cfg.pipeline)},
              {"evaluation", {{"iou_threshold", cfg.iou_threshold}}},
              {"annotation",
               {{"weights", cfg.weights_path},
                {"part_mode", part_mode_name(cfg.part_mode)},
                {"drift_tolerance_pp", cfg.drift_tolerance_pp}}},
              {"synthesis",
               {{"policy", policy_name(cfg.policy)},
                {"max_attempts", cfg.max_attempts},
                {"min_scale", cfg.min_scale},
                {"max_scale", cfg.max_scale}}}};
}

ToolkitConfig config_from_json(const json& j) {
  json doc = to_json(ToolkitConfig{});
  overlay(doc, j, "");
  ToolkitConfig cfg;
  try {
    cfg.pipeline = pipeline_config_from_json(doc.at("pipeline"));
    cfg.iou_threshold = doc.at("evaluation").at("iou_threshold").get<double>();
    const json& a = doc.at("annotation");
    cfg.weights_path = a.at("weights").get<std::string>();
    cfg.part_mode = parse_part_mode(a.at("part_mode").get<std::string>());
    cfg.drift_tolerance_pp = a.at("drift_tolerance_pp").get<double>();
    const json& s = doc.at("synthesis");
    cfg.policy = parse_policy(s.at("policy").get<std::string>());
    cfg.max_attempts = s.at("max_attempts").get<int>();
    cfg.min_scale = s.at("min_scale").get<double>();
    cfg.max_scale = s.at("max_scale").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.detail());
  }
  cfg.validate();
  return cfg;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::kInvalidConfig, "override must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw Error(ErrorCode::kInvalidConfig, "'" + key + "' is a section, not a value");
  // Strings that happen to parse as JSON ("1") stay strings where a string is expected.
  if (node->is_string() && !value.is_string()) value = raw;
  if (!same_kind(*node, value)) {
    throw Error(ErrorCode::kInvalidConfig, "override '" + key + "' has the wrong type");
  }
  *node = value;
}

ToolkitConfig resolve_config(const std::optional<std::filesystem::path>& file,
                             const std::vector<std::string>& overrides) {
  json doc = to_json(ToolkitConfig{});
  std::optional<std::filesystem::path> path = file;
  if (!path) {
    if (const char* env = std::getenv(std::string(kConfigEnvVar).c_str()); env && *env) path = env;
  }
  if (path) {
    const json user = json::parse(read_file(*path), nullptr, false);
    if (user.is_discarded()) throw Error(ErrorCode::kInvalidConfig, "config file is not JSON: " + path->string());
    overlay(doc, user, "");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

std::string dump_config(const ToolkitConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string config_hash(const ToolkitConfig& cfg) { return hex64(fnv1a64(to_json(cfg).dump())); }

PartWeightTable weights_for(const ToolkitConfig& cfg) {
  if (cfg.weights_path.empty()) return PartWeightTable::toolkit_default();
  return load_weight_table(cfg.weights_path);
}

}  // namespace escooter
