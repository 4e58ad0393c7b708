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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace escooter {

inline constexpr int kNumBins = 10;
inline constexpr int kNumClasses = 2;
inline constexpr std::string_view kManifestVersion = "1.0";

// Axis-aligned box in continuous pixel coordinates. x/y may be negative
// before clipping.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// w > 0, h > 0, every field finite.
bool is_valid(const BBox& b);

// Throws Error(kInvalidBox) when the fields do not form a valid box.
BBox make_box(double x, double y, double w, double h);

enum class ClassLabel { kEscooterRider = 0, kOtherVru = 1 };

std::string_view label_name(ClassLabel label);
ClassLabel parse_label(std::string_view name);

// COCO visibility flags.
enum class Visibility : int {
  kNotLabeled = 0,
  kLabeledOccluded = 1,
  kLabeledVisible = 2,
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  Visibility v = Visibility::kNotLabeled;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct ImageRef {
  std::string path;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

// Occluder top-left corner in target-image pixels plus the resampling
// factor applied to the occluder asset.
struct Placement {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;

  friend bool operator==(const Placement&, const Placement&) = default;
};

// How a synthesized instance was produced; enough to recompose it.
struct SynthesisRecord {
  std::string base_id;
  std::string occluder_id;  // empty when the base was emitted unmodified
  Placement placement;
  std::uint64_t seed = 0;
  int target_bin = 0;

  friend bool operator==(const SynthesisRecord&, const SynthesisRecord&) = default;
};

struct GroundTruthInstance {
  std::string id;
  ImageRef image;
  BBox bbox;
  ClassLabel label = ClassLabel::kOtherVru;
  std::vector<Keypoint> keypoints;
  std::optional<std::string> mask_path;
  // Per-pixel semantic part labels (see annotation.hpp for the encoding).
  std::optional<std::string> part_map_path;
  double occlusion_pct = 0.0;
  int occlusion_bin = 0;
  // Stored level is authoritative (manually verified hard case); the
  // annotator reports but never recomputes it.
  bool manual_override = false;
  std::string provenance;
  std::optional<SynthesisRecord> synthesis;

  friend bool operator==(const GroundTruthInstance&,
                         const GroundTruthInstance&) = default;
};

struct DatasetManifest {
  std::string version{kManifestVersion};
  std::vector<GroundTruthInstance> instances;
  // Free-form generator metadata (toolkit version, config hash, ...).
  std::map<std::string, std::string> metadata;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// counts[bin][label]; partitions the instance set.
struct ManifestStats {
  std::array<std::array<std::int64_t, kNumClasses>, kNumBins> counts{};

  std::int64_t bin_total(int bin) const;
  std::int64_t class_total(ClassLabel label) const;
  std::int64_t total() const;
};

// Parses and fully validates a manifest document. Throws Error with
// kMalformedDocument, kDuplicateId, kBinMismatch or kOutOfRangeOcclusion.
DatasetManifest parse_manifest(std::string_view bytes);
std::string serialize_manifest(const DatasetManifest& m);

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

ManifestStats manifest_stats(const DatasetManifest& m);

// Stable content hash of the canonical serialization, hex encoded.
std::string manifest_hash(const DatasetManifest& m);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace escooter
