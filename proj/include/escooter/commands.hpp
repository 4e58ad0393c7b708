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
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "escooter/annotation.hpp"
#include "escooter/backends.hpp"
#include "escooter/config.hpp"
#include "escooter/domain.hpp"
#include "escooter/synthesizer.hpp"

namespace escooter {

// ---- annotate ----

struct AnnotationRow {
  std::string id;
  double stored_pct = 0.0;
  std::optional<double> recomputed_pct;
  std::optional<double> gap_pp;
  // "ok", "drift", "manual_override", "no_visibility_inputs" or "out_of_range".
  std::string status;
};

struct AnnotationReport {
  DatasetManifest manifest;  // stored levels replaced by recomputed ones
  std::vector<AnnotationRow> rows;
  std::int64_t flagged = 0;  // drift + out_of_range
  std::int64_t skipped = 0;
};

// Recomputes every instance's occlusion level. Part maps win over
// keypoints; manual overrides are reported and left untouched. Paths in the
// manifest are resolved against `base_dir`.
AnnotationReport annotate_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                                   const PartWeightTable& weights, PartMode mode, double tolerance_pp);

std::string annotation_report_json(const AnnotationReport& report, const ToolkitConfig& cfg);

// ---- synthesize ----

// Plan file: {"quotas": [10 ints], "seed": n, optional "policy",
// "max_attempts", "min_scale", "max_scale", "bases": [...], "occluders": [...]}.
// bases: {"id", "unit", "label"} uniform figures.
// occluders: {"id", "category", "image", optional "mask"} PNG cutouts or
// {"id", "category", "shape": "box"|"ellipse", "width", "height"}.
// Plan paths are relative to the plan file.
struct PlanFile {
  SynthesisPlan plan;
  std::vector<BaseInstance> bases;
  std::vector<OccluderAsset> occluders;
};

PlanFile parse_plan(std::string_view document, const std::filesystem::path& base_dir, const ToolkitConfig& cfg);

// Two rider and two non-rider uniform figures at two scales.
std::vector<BaseInstance> builtin_bases();
// Solid box and ellipse occluders. The panel and the bush reach every bin on
// every builtin base; the low barrier only covers the lower bins.
std::vector<OccluderAsset> builtin_occluders();

// ---- backends ----

// "oracle", "file:PATH" or "exec:COMMAND".
std::unique_ptr<DetectorBackend> make_detector(const std::string& spec, const DatasetManifest& manifest,
                                               std::shared_ptr<AdapterProcess>* shared = nullptr);
// "oracle", "constant:SCORE" or "exec:COMMAND". An exec classifier reuses
// `*shared` when it runs the same command as the detector.
std::unique_ptr<ClassifierBackend> make_classifier(const std::string& spec, const DatasetManifest& manifest,
                                                   std::shared_ptr<AdapterProcess>* shared = nullptr);

// ---- subcommands; each returns the process exit status ----

int cmd_stats(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out,
              std::ostream& stdout_stream);

int cmd_annotate(const std::filesystem::path& manifest, const std::filesystem::path& out,
                 const std::optional<std::filesystem::path>& report, bool allow_drift,
                 const ToolkitConfig& cfg, std::ostream& stdout_stream);

int cmd_synthesize(const std::filesystem::path& plan, const std::filesystem::path& out_dir,
                   const ToolkitConfig& cfg, std::ostream& stdout_stream);

int cmd_run(const std::filesystem::path& manifest, const std::filesystem::path& out,
            const std::string& detector, const std::string& classifier, const ToolkitConfig& cfg,
            std::ostream& stdout_stream);

int cmd_evaluate(const std::filesystem::path& manifest, const std::filesystem::path& run,
                 const std::filesystem::path& out_dir, const std::string& label, const ToolkitConfig& cfg,
                 std::ostream& stdout_stream);

int cmd_compare(const std::vector<std::filesystem::path>& tables, const std::filesystem::path& out_dir,
                std::ostream& stdout_stream);

}  // namespace escooter
