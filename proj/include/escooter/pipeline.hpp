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

#include "escooter/backends.hpp"
#include "escooter/domain.hpp"
#include "escooter/geometry.hpp"
#include "escooter/image.hpp"

namespace escooter {

enum class PipelineMode {
  // Fixed three-side expansion for every candidate.
  kBaseline,
  // Aspect-ratio gate picks the downward expansion.
  kOcclusionAware,
};

std::string_view mode_name(PipelineMode mode);
PipelineMode parse_mode(std::string_view name);

struct PipelineConfig {
  PipelineMode mode = PipelineMode::kOcclusionAware;
  ExpansionConfig expansion;
  double score_floor = 0.5;
  double decision_threshold = 0.5;
  // 0 = OpenMP default.
  int workers = 0;
  // Wall-clock per stage is measured always but serialized only when set,
  // since it breaks byte-for-byte reproducibility.
  bool record_timings = false;
  // Where crops go for classifiers that need pixels; empty = temp dir.
  std::string crop_dir;

  void validate() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct CandidateTrace {
  int index = 0;
  BBox bbox;
  double score = 0.0;
  bool passed_floor = false;
  bool gated = false;
  std::optional<BBox> expanded;
  std::optional<BBox> clipped;
  std::optional<PixelRect> crop;
  std::optional<ClassifierOutput> classifier;
  bool rider = false;  // final verdict

  // Present when the candidate's chain ended early (e.g. a degenerate crop).
  std::optional<std::string> dropped;
};

struct StageTimings {
  double detect_ms = 0.0;
  double expand_ms = 0.0;
  double crop_ms = 0.0;
  double classify_ms = 0.0;
};

struct ImageRecord {
  std::string image_id;
  std::vector<CandidateTrace> candidates;
  std::optional<std::string> error_code;
  std::optional<std::string> error_message;
  StageTimings timings;
};

struct PipelineRun {
  PipelineConfig config;
  BackendDescriptor detector;
  BackendDescriptor classifier;
  std::string manifest_hash;
  std::vector<ImageRecord> images;  // sorted by image_id

  std::vector<const ImageRecord*> failures() const;
};

// Crop of a clipped box, with integer bounds rounded half away from zero.
// Throws kDegenerateCrop when the rounded area is zero.
RgbaImage crop(const RgbaImage& image, const BBox& clipped);

// Full candidate chain for one image. Throws kBackendFailure or
// kImageUnreadable; run_dataset turns those into per-image errors.
ImageRecord run_image(const ImageInput& image, const PipelineConfig& cfg, DetectorBackend& det,
                      ClassifierBackend& cls);

// One record per distinct image of the manifest. Image paths are resolved
// against `base_dir`. Never aborts on a per-image failure.
PipelineRun run_dataset(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                        const PipelineConfig& cfg, DetectorBackend& det, ClassifierBackend& cls);

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
// Hex FNV-1a of the compact config JSON.
std::string pipeline_config_hash(const PipelineConfig& cfg);

std::string serialize_run(const PipelineRun& run);
PipelineRun parse_run(std::string_view document);

}  // namespace escooter
