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

#include "escooter/annotation.hpp"

#include <cmath>
#include <set>

#include "escooter/error.hpp"
#include "escooter/kernels.hpp"
#include "json.hpp"

namespace escooter {
namespace {

constexpr std::array<std::string_view, kNumParts> kPartNames = {
    "head", "torso", "left_arm", "right_arm", "left_leg", "right_leg"};

double apply_mode(double fraction, PartMode mode) {
  if (mode == PartMode::kBinary) return fraction >= 0.5 ? 1.0 : 0.0;
  return fraction;
}

// Mask set anywhere in the 3x3 neighbourhood of the keypoint's pixel.
bool mask_confirms(const GrayImage& mask, const Keypoint& kp) {
  const int px = static_cast<int>(std::floor(kp.x));
  const int py = static_cast<int>(std::floor(kp.y));
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (mask.contains(px + dx, py + dy) && mask.at(px + dx, py + dy) != 0) return true;
    }
  }
  return false;
}

}  // namespace

std::string_view part_name(PartId part) { return kPartNames[static_cast<int>(part)]; }

PartId parse_part(std::string_view name) {
  for (int i = 0; i < kNumParts; ++i) {
    if (kPartNames[i] == name) return static_cast<PartId>(i);
  }
  throw Error(ErrorCode::kWeightTableInvalid, "unknown part '" + std::string(name) + "'");
}

const Skeleton& coco17_skeleton() {
  static const Skeleton skeleton = {
      {PartId::kHead, {0, 1, 2, 3, 4}},
      {PartId::kTorso, {5, 6, 11, 12}},
      {PartId::kLeftArm, {7, 9}},
      {PartId::kRightArm, {8, 10}},
      {PartId::kLeftLeg, {13, 15}},
      {PartId::kRightLeg, {14, 16}},
  };
  return skeleton;
}

PartWeightTable PartWeightTable::toolkit_default() {
  PartWeightTable t;
  t.weights = {9.0, 37.0, 9.0, 9.0, 18.0, 18.0};
  return t;
}

void PartWeightTable::validate() const {
  double sum = 0.0;
  for (const double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::kWeightTableInvalid, "weights must be finite and >= 0");
    }
    sum += w;
  }
  if (std::fabs(sum - 100.0) > 1e-9) {
    throw Error(ErrorCode::kWeightTableInvalid,
                "weights sum to " + std::to_string(sum) + ", expected 100");
  }
}

PartWeightTable parse_weight_table(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kWeightTableInvalid, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kWeightTableInvalid, "expected an object");
  PartWeightTable t;
  std::set<int> seen;
  for (const auto& [key, value] : doc.items()) {
    const PartId p = parse_part(key);
    if (!value.is_number()) {
      throw Error(ErrorCode::kWeightTableInvalid, "weight for '" + key + "' is not a number");
    }
    t.weights[static_cast<int>(p)] = value.get<double>();
    seen.insert(static_cast<int>(p));
  }
  if (static_cast<int>(seen.size()) != kNumParts) {
    throw Error(ErrorCode::kWeightTableInvalid, "all six parts must be weighted");
  }
  t.validate();
  return t;
}

PartWeightTable load_weight_table(const std::filesystem::path& path) {
  return parse_weight_table(read_file(path));
}

std::string serialize_weight_table(const PartWeightTable& table) {
  nlohmann::json doc = nlohmann::json::object();
  for (int i = 0; i < kNumParts; ++i) doc[std::string(kPartNames[i])] = table.weights[i];
  return doc.dump(2) + "\n";
}

std::vector<PartVisibility> infer_part_visibility(std::span<const Keypoint> keypoints,
                                                  const Skeleton& skeleton,
                                                  const GrayImage* mask, PartMode mode) {
  std::size_t expected = 0;
  for (const auto& part : skeleton) expected += part.keypoint_indices.size();
  if (keypoints.size() != expected) {
    throw Error(ErrorCode::kSkeletonMismatch, "got " + std::to_string(keypoints.size()) +
                                                  " keypoints, skeleton expects " +
                                                  std::to_string(expected));
  }
  std::vector<PartVisibility> out;
  out.reserve(skeleton.size());
  for (const auto& part : skeleton) {
    int labeled = 0;
    int visible = 0;
    for (const int idx : part.keypoint_indices) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= keypoints.size()) {
        throw Error(ErrorCode::kSkeletonMismatch, "keypoint index out of range");
      }
      const Keypoint& kp = keypoints[idx];
      if (kp.v == Visibility::kNotLabeled) continue;
      ++labeled;
      if (kp.v == Visibility::kLabeledVisible && (mask == nullptr || mask_confirms(*mask, kp))) {
        ++visible;
      }
    }
    const double fraction = labeled == 0 ? 0.0 : static_cast<double>(visible) / labeled;
    out.push_back({part.id, apply_mode(fraction, mode)});
  }
  return out;
}

std::vector<PartVisibility> part_visibility_from_part_map(const GrayImage& part_map,
                                                          PartMode mode) {
  const auto hist = kernels::part_histogram(part_map.data());
  std::vector<PartVisibility> out;
  out.reserve(kNumParts);
  for (int i = 0; i < kNumParts; ++i) {
    const double fraction =
        hist.total[i] == 0
            ? 0.0
            : static_cast<double>(hist.total[i] - hist.occluded[i]) / static_cast<double>(hist.total[i]);
    out.push_back({static_cast<PartId>(i), apply_mode(fraction, mode)});
  }
  return out;
}

double occlusion_level(std::span<const PartVisibility> parts, const PartWeightTable& weights) {
  weights.validate();
  std::array<int, kNumParts> seen{};
  std::array<double, kNumParts> fraction{};
  for (const auto& pv : parts) {
    const int i = static_cast<int>(pv.part);
    if (i < 0 || i >= kNumParts) throw Error(ErrorCode::kMissingPart, "unknown part id");
    if (++seen[i] > 1) {
      throw Error(ErrorCode::kMissingPart,
                  "part '" + std::string(part_name(pv.part)) + "' listed twice");
    }
    if (!(pv.visible_fraction >= 0.0 && pv.visible_fraction <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "visible_fraction outside [0,1]");
    }
    fraction[i] = pv.visible_fraction;
  }
  double level = 0.0;
  for (int i = 0; i < kNumParts; ++i) {
    if (seen[i] == 0) {
      throw Error(ErrorCode::kMissingPart,
                  "part '" + std::string(kPartNames[i]) + "' has no visibility entry");
    }
    level += weights.weights[i] * (1.0 - fraction[i]);
  }
  return std::clamp(level, 0.0, 100.0);
}

int bin_of(double pct) {
  if (!(pct >= 0.0 && pct < 100.0)) {
    throw Error(ErrorCode::kOutOfRange,
                "occlusion " + std::to_string(pct) + " outside [0, 100)");
  }
  return std::min(9, static_cast<int>(std::floor(pct / 10.0)));
}

}  // namespace escooter
