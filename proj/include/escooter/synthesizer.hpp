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
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "escooter/annotation.hpp"
#include "escooter/domain.hpp"
#include "escooter/image.hpp"

namespace escooter {

enum class OccluderCategory { kVehicle, kStreetFurniture, kPerson, kOther };

std::string_view category_name(OccluderCategory c);
OccluderCategory parse_category(std::string_view name);

// RGBA cutout. Alpha >= kAlphaOpaque is the binary occlusion footprint.
struct OccluderAsset {
  std::string id;
  RgbaImage image;
  OccluderCategory category = OccluderCategory::kOther;

  std::int64_t footprint_pixels() const;
};

// Throws kMalformedDocument if the footprint is empty.
OccluderAsset make_occluder(std::string id, RgbaImage image, OccluderCategory category);

// Loads a cutout; when `mask_path` is given its nonzero pixels become the
// alpha channel and its dimensions must match the image.
OccluderAsset load_occluder(std::string id, const std::filesystem::path& image_path,
                            const std::filesystem::path* mask_path, OccluderCategory category);

// Solid rectangular stand-in (vehicle panel, barrier, ...).
OccluderAsset make_box_occluder(std::string id, int width, int height, Rgba color,
                                OccluderCategory category);

// Solid elliptical stand-in (bush, pedestrian blob, ...).
OccluderAsset make_ellipse_occluder(std::string id, int width, int height, Rgba color,
                                    OccluderCategory category);

// An unoccluded instance ready for compositing. The instance mask is
// every nonzero pixel of `part_map`.
struct BaseInstance {
  std::string id;
  ClassLabel label = ClassLabel::kOtherVru;
  RgbaImage image;
  GrayImage part_map;
  std::vector<Keypoint> keypoints;  // coco17 layout
  BBox bbox;
};

GrayImage instance_mask(const GrayImage& part_map);

struct UniformFigureSpec {
  // Pixel size of one layout unit; must be a positive multiple of 4 so that
  // every part rectangle has an integral size.
  int unit = 4;
  int margin_left = 24;
  int margin_right = 24;
  int margin_top = 8;
  int margin_bottom = 24;
  ClassLabel label = ClassLabel::kEscooterRider;
};

// Upright figure built from six rectangles whose pixel areas are
// proportional to the toolkit-default weights (head 9, torso 37, arms 9,
// legs 18), so pixel occlusion and weighted occlusion coincide. The figure
// is 7 x 21.25 units. Riders get a scooter drawn beside the legs; scooter
// pixels are not part of the instance.
BaseInstance make_uniform_figure(std::string id, const UniformFigureSpec& spec);

// Pixel rectangles of each part of a uniform figure, in image coordinates.
std::array<PixelRect, kNumParts> uniform_figure_parts(const UniformFigureSpec& spec);

struct ComposedInstance {
  RgbaImage image;
  GrayImage part_map;
  GrayImage mask;
  std::vector<Keypoint> keypoints;
};

// Alpha-blends the scaled occluder over the base. Keypoints and part pixels
// under the opaque footprint are flagged occluded. Throws kNoOverlap when the
// placed occluder misses the image.
ComposedInstance composite(const BaseInstance& base, const OccluderAsset& occ, const Placement& p);

// The unmodified base, in composed form.
ComposedInstance as_composed(const BaseInstance& base);

// Weighted occlusion of a composed instance from its part map.
double achieved_occlusion(const ComposedInstance& composed,
                          const PartWeightTable& weights = PartWeightTable::toolkit_default());

enum class SearchPolicy {
  // Coarse grid over vertical offset per scale, then bisection.
  kGridBisect,
  // Seeded uniform sampling of scale and offsets.
  kRandom,
};

std::string_view policy_name(SearchPolicy p);
SearchPolicy parse_policy(std::string_view name);

struct SynthesisSpec {
  int target_bin = 0;
  std::uint64_t seed = 0;
  int max_attempts = 384;
  SearchPolicy policy = SearchPolicy::kGridBisect;
  double min_scale = 0.5;
  double max_scale = 1.5;
  int scale_steps = 5;
  int grid_points = 8;
};

struct PlacementResult {
  Placement placement;
  double achieved_pct = 0.0;
  int attempts = 0;
};

// Finds a placement whose achieved occlusion falls in
// [10 * bin, 10 * bin + 10). Deterministic given the spec. Throws
// kInfeasible when the occluder is too small or the attempt budget runs out.
PlacementResult solve_placement(const BaseInstance& base, const OccluderAsset& occ,
                                const SynthesisSpec& spec,
                                const PartWeightTable& weights = PartWeightTable::toolkit_default());

// Occlusion the occluder would produce at `p` without materializing the
// composite.
double placement_occlusion(const BaseInstance& base, const RgbaImage& scaled_occluder, int ox,
                           int oy, const PartWeightTable& weights);

struct SynthesisPlan {
  std::array<int, kNumBins> quotas{};
  std::uint64_t seed = 0;
  SearchPolicy policy = SearchPolicy::kGridBisect;
  int max_attempts = 384;
  double min_scale = 0.5;
  double max_scale = 1.5;
};

struct SynthesizedImage {
  std::string instance_id;
  ComposedInstance composed;
};

struct SynthesisOutput {
  DatasetManifest manifest;
  std::vector<SynthesizedImage> images;  // same order as manifest.instances
};

// Builds quotas[b] instances for every bin b. Instances are synthesized in
// parallel; output order and bytes do not depend on the thread count.
// Throws kQuotaUnmet naming the bins that fell short.
SynthesisOutput synthesize_dataset(const std::vector<BaseInstance>& bases,
                                   const std::vector<OccluderAsset>& occluders,
                                   const SynthesisPlan& plan,
                                   const PartWeightTable& weights = PartWeightTable::toolkit_default());

// Writes images/<id>.png, masks/<id>.png, parts/<id>.png and manifest.json
// under `dir`; manifest paths are relative to `dir`.
void write_synthesis(const std::filesystem::path& dir, const SynthesisOutput& out);

// Recomposes an instance from its synthesis record.
ComposedInstance recompose(const BaseInstance& base, const OccluderAsset* occ,
                           const SynthesisRecord& record);

// Uniform double in [0, 1) from the top 53 bits of one draw; unlike the
// std distributions this is identical across standard libraries.
double unit_uniform(std::mt19937_64& rng);

}  // namespace escooter
