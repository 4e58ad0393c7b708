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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "escooter/backends.hpp"
#include "escooter/domain.hpp"
#include "escooter/pipeline.hpp"
#include "json.hpp"

namespace escooter {

inline constexpr double kDefaultIouThreshold = 0.5;

// Rules recorded in every report header.
inline constexpr std::string_view kTnRule =
    "non-rider GT matched to a non-rider verdict or left unmatched counts as TN";
inline constexpr std::string_view kFpRule =
    "unmatched rider-verdict candidates count as FP in the bin of the highest-IoU GT of the "
    "image (ties: nearest center, then lowest index); bin 0 when the image has no GT";

struct EvalGt {
  BBox box;
  ClassLabel label = ClassLabel::kOtherVru;
  int bin = 0;
};

struct EvalCandidate {
  BBox box;
  double score = 0.0;
  bool rider = false;
};

struct MatchResult {
  std::vector<std::optional<int>> gt_to_candidate;
  std::vector<std::optional<int>> candidate_to_gt;
};

// Candidates in descending score order (stable on input order) each take
// the highest-IoU unmatched GT with IoU >= threshold; IoU ties go to the
// lowest GT index.
MatchResult match_predictions(std::span<const EvalGt> gt, std::span<const EvalCandidate> candidates,
                              double iou_threshold = kDefaultIouThreshold);

using BinCounts = std::array<ConfusionCounts, kNumBins>;

// Throws kMissingBin when a GT bin lies outside 0..9.
BinCounts confusion_from_matches(std::span<const EvalGt> gt, std::span<const EvalCandidate> candidates,
                                 const MatchResult& matches);

// (tp + tn) / total. Throws kEmptyCounts on an all-zero tuple.
double accuracy(const ConfusionCounts& c);
// tp / (tp + fn) and fn / (tp + fn); empty when there are no riders.
std::optional<double> tp_rate(const ConfusionCounts& c);
std::optional<double> fn_rate(const ConfusionCounts& c);
std::optional<double> accuracy_or_empty(const ConfusionCounts& c);

// Fixed-point text used by every report.
std::string format_fixed(double value, int decimals);
inline std::string format_accuracy(double value) { return format_fixed(value, 3); }
inline std::string format_pp(double value) { return format_fixed(value, 2); }

// "0-9%" .. "90-99%".
std::string bin_label(int bin);

struct RunDescriptor {
  std::string label;  // free text, e.g. "occlusion_aware"
  std::string toolkit_version;
  std::string manifest_hash;
  std::string config_hash;
  std::string mode;
  BackendDescriptor detector;
  BackendDescriptor classifier;
  double iou_threshold = kDefaultIouThreshold;
  std::int64_t failed_images = 0;

  friend bool operator==(const RunDescriptor&, const RunDescriptor&) = default;
};

struct BinMetricsTable {
  RunDescriptor run;
  BinCounts bins{};

  ConfusionCounts overall() const;

  friend bool operator==(const BinMetricsTable&, const BinMetricsTable&) = default;
};

struct InstanceOutcome {
  std::string id;
  std::string image;
  ClassLabel label = ClassLabel::kOtherVru;
  int bin = 0;
  std::optional<int> candidate;  // matched candidate index in the image record
  std::optional<bool> rider_verdict;
  std::string outcome;  // "TP", "FN", "TN" or "FP"
};

struct Evaluation {
  BinMetricsTable table;
  std::vector<InstanceOutcome> instances;
  // Unmatched rider-verdict candidates, already included in table FPs.
  std::int64_t unmatched_fp = 0;
};

// Throws kManifestMismatch when the run was produced from another manifest
// or references images the manifest lacks. Failed images contribute their
// GT with no candidates.
Evaluation evaluate_run(const DatasetManifest& manifest, const PipelineRun& run,
                        double iou_threshold = kDefaultIouThreshold, std::string label = "");

struct BinDelta {
  std::optional<double> accuracy_pp;
  std::optional<double> tp_rate_pp;
  std::optional<double> fn_rate_pp;
  std::int64_t fp_delta = 0;
  bool a_exceeds_b = false;
};

struct Comparison {
  RunDescriptor a;
  RunDescriptor b;
  double accuracy_a = 0.0;
  double accuracy_b = 0.0;
  double overall_delta_pp = 0.0;  // 100 * (acc_a - acc_b), unrounded
  std::array<BinDelta, kNumBins> bins{};
  // Bins where a does not beat b on accuracy (undefined counts as not).
  std::vector<int> non_dominant_bins;
};

// Throws kManifestMismatch when the tables come from different manifests.
Comparison compare_runs(const BinMetricsTable& a, const BinMetricsTable& b);

struct FpCounts {
  std::string label;
  std::int64_t total = 0;
  std::array<std::int64_t, kNumBins> per_bin{};

  friend bool operator==(const FpCounts&, const FpCounts&) = default;
};

std::vector<FpCounts> fp_count_by_run(std::span<const BinMetricsTable> runs);

// Serialization. JSON keeps the raw counts; CSV adds '#' metadata lines
// above a header row bin,tp,tn,fp,fn,accuracy,tp_rate,fn_rate.
nlohmann::json to_json(const RunDescriptor& d);
RunDescriptor run_descriptor_from_json(const nlohmann::json& j);
std::string table_to_json(const BinMetricsTable& t);
BinMetricsTable table_from_json(std::string_view document);
std::string table_to_csv(const BinMetricsTable& t);
BinMetricsTable table_from_csv(std::string_view document);
// Picks the reader by extension (.csv, otherwise JSON).
BinMetricsTable load_table(const std::filesystem::path& path);

std::string instances_to_json(const Evaluation& e);

std::string comparison_to_json(std::span<const BinMetricsTable> tables);
// metric: "accuracy", "tp_rate", "fn_rate" or "fp"; one column per table.
std::string series_csv(std::span<const BinMetricsTable> tables, std::string_view metric);
std::string fp_counts_csv(std::span<const BinMetricsTable> tables);
std::vector<FpCounts> fp_counts_from_csv(std::string_view document);

}  // namespace escooter
