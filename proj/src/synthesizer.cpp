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

#include "escooter/synthesizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "escooter/error.hpp"
#include "escooter/kernels.hpp"

namespace escooter {
namespace {

constexpr Rgba kBackground{196, 200, 204, 255};
constexpr Rgba kScooterGray{70, 70, 78, 255};
constexpr std::array<Rgba, kNumParts> kPartColors = {{
    {230, 190, 150, 255},  // head
    {40, 90, 170, 255},    // torso
    {200, 160, 120, 255},  // left arm
    {200, 160, 120, 255},  // right arm
    {30, 40, 60, 255},     // left leg
    {30, 40, 60, 255},     // right leg
}};

void fill_rect(RgbaImage& img, int x0, int y0, int x1, int y1, Rgba c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width());
  y1 = std::min(y1, img.height());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) img.at(x, y) = c;
  }
}

bool overlaps_image(int ox, int oy, int w, int h, int width, int height) {
  return ox < width && oy < height && ox + w > 0 && oy + h > 0;
}

// Occluded-part-pixel totals of the base before any occluder is added.
kernels::PartHistogram base_histogram(const BaseInstance& base) {
  return kernels::part_histogram(base.part_map.data());
}

double level_from_histogram(const kernels::PartHistogram& total,
                            const kernels::PartHistogram& covered,
                            const PartWeightTable& weights) {
  std::vector<PartVisibility> parts;
  parts.reserve(kNumParts);
  for (int i = 0; i < kNumParts; ++i) {
    const std::int64_t all = total.total[i];
    const std::int64_t occluded = total.occluded[i] + covered.occluded[i];
    const double fraction =
        all == 0 ? 0.0 : static_cast<double>(all - occluded) / static_cast<double>(all);
    parts.push_back({static_cast<PartId>(i), fraction});
  }
  return occlusion_level(parts, weights);
}

// Horizontal offset that keeps the occluder over the figure: a wide
// occluder spans the figure, a narrow one stays inside it.
int pick_x(std::mt19937_64& rng, const PixelRect& fig, int occ_width) {
  int lo = fig.x;
  int hi = fig.x + fig.w - occ_width;
  if (occ_width >= fig.w) std::swap(lo, hi);
  const double u = unit_uniform(rng);
  const int x = lo + static_cast<int>(std::floor(u * (hi - lo + 1)));
  return std::clamp(x, lo, hi);
}

std::vector<double> scale_ladder(const SynthesisSpec& spec) {
  if (spec.scale_steps == 1) return {spec.max_scale};
  std::vector<double> out;
  for (int i = 0; i < spec.scale_steps; ++i) {
    out.push_back(spec.min_scale +
                  (spec.max_scale - spec.min_scale) * i / static_cast<double>(spec.scale_steps - 1));
  }
  return out;
}

std::string format_id(int bin, int k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "syn_b%d_%04d", bin, k);
  return buf;
}

}  // namespace

std::string_view category_name(OccluderCategory c) {
  switch (c) {
    case OccluderCategory::kVehicle: return "vehicle";
    case OccluderCategory::kStreetFurniture: return "street_furniture";
    case OccluderCategory::kPerson: return "person";
    case OccluderCategory::kOther: return "other";
  }
  return "other";
}

OccluderCategory parse_category(std::string_view name) {
  if (name == "vehicle") return OccluderCategory::kVehicle;
  if (name == "street_furniture") return OccluderCategory::kStreetFurniture;
  if (name == "person") return OccluderCategory::kPerson;
  if (name == "other") return OccluderCategory::kOther;
  throw Error(ErrorCode::kMalformedDocument, "unknown occluder category '" + std::string(name) + "'");
}

std::int64_t OccluderAsset::footprint_pixels() const {
  std::int64_t n = 0;
  for (const Rgba& p : image.data()) n += (p.a >= kAlphaOpaque);
  return n;
}

OccluderAsset make_occluder(std::string id, RgbaImage image, OccluderCategory category) {
  OccluderAsset occ{std::move(id), std::move(image), category};
  if (occ.image.empty() || occ.footprint_pixels() == 0) {
    throw Error(ErrorCode::kMalformedDocument, "occluder '" + occ.id + "' has an empty mask");
  }
  return occ;
}

OccluderAsset load_occluder(std::string id, const std::filesystem::path& image_path,
                            const std::filesystem::path* mask_path, OccluderCategory category) {
  RgbaImage image = read_png_rgba(image_path);
  if (mask_path != nullptr) {
    const GrayImage mask = read_png_gray(*mask_path);
    if (mask.width() != image.width() || mask.height() != image.height()) {
      throw Error(ErrorCode::kMalformedDocument,
                  "occluder mask dimensions differ from image: " + mask_path->string());
    }
    for (std::size_t i = 0; i < mask.data().size(); ++i) {
      image.data()[i].a = mask.data()[i] != 0 ? 255 : 0;
    }
  }
  return make_occluder(std::move(id), std::move(image), category);
}

OccluderAsset make_box_occluder(std::string id, int width, int height, Rgba color,
                                OccluderCategory category) {
  color.a = 255;
  return make_occluder(std::move(id), RgbaImage(width, height, color), category);
}

OccluderAsset make_ellipse_occluder(std::string id, int width, int height, Rgba color,
                                    OccluderCategory category) {
  RgbaImage img(width, height, Rgba{0, 0, 0, 0});
  const double cx = width / 2.0;
  const double cy = height / 2.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = (x + 0.5 - cx) / cx;
      const double dy = (y + 0.5 - cy) / cy;
      if (dx * dx + dy * dy <= 1.0) img.at(x, y) = Rgba{color.r, color.g, color.b, 255};
    }
  }
  return make_occluder(std::move(id), std::move(img), category);
}

GrayImage instance_mask(const GrayImage& part_map) {
  GrayImage mask(part_map.width(), part_map.height(), 0);
  for (std::size_t i = 0; i < mask.data().size(); ++i) {
    const std::uint8_t code = part_map.data()[i];
    mask.data()[i] = (code != 0 && !(code & kPartOccludedBit)) ? 255 : 0;
  }
  return mask;
}

std::array<PixelRect, kNumParts> uniform_figure_parts(const UniformFigureSpec& spec) {
  if (spec.unit <= 0 || spec.unit % 4 != 0) {
    throw Error(ErrorCode::kInvalidConfig, "figure unit must be a positive multiple of 4");
  }
  const int s = spec.unit;
  const int ox = spec.margin_left;
  const int oy = spec.margin_top;
  // Quarter-unit coordinates are exact because s is a multiple of 4.
  auto q = [s](int quarters) { return quarters * s / 4; };
  std::array<PixelRect, kNumParts> r;
  r[static_cast<int>(PartId::kHead)] = {ox + q(8), oy, q(12), q(12)};
  r[static_cast<int>(PartId::kTorso)] = {ox + q(6), oy + q(12), q(16), q(37)};
  // Image-left limbs are the figure's right side.
  r[static_cast<int>(PartId::kRightArm)] = {ox, oy + q(12), q(6), q(24)};
  r[static_cast<int>(PartId::kLeftArm)] = {ox + q(22), oy + q(12), q(6), q(24)};
  r[static_cast<int>(PartId::kRightLeg)] = {ox + q(6), oy + q(49), q(8), q(36)};
  r[static_cast<int>(PartId::kLeftLeg)] = {ox + q(14), oy + q(49), q(8), q(36)};
  return r;
}

BaseInstance make_uniform_figure(std::string id, const UniformFigureSpec& spec) {
  const auto parts = uniform_figure_parts(spec);
  const int s = spec.unit;
  const int fig_w = 7 * s;
  const int fig_h = 85 * s / 4;
  const int width = spec.margin_left + fig_w + spec.margin_right;
  const int height = spec.margin_top + fig_h + spec.margin_bottom;

  BaseInstance base;
  base.id = std::move(id);
  base.label = spec.label;
  base.image = RgbaImage(width, height, kBackground);
  base.part_map = GrayImage(width, height, 0);
  base.bbox = BBox{static_cast<double>(spec.margin_left), static_cast<double>(spec.margin_top),
                   static_cast<double>(fig_w), static_cast<double>(fig_h)};

  const int fig_bottom = spec.margin_top + fig_h;
  if (spec.label == ClassLabel::kEscooterRider) {
    // Deck under the feet, stem and handlebar in front, two wheels.
    const int x0 = spec.margin_left - 2 * s;
    const int x1 = spec.margin_left + 9 * s;
    fill_rect(base.image, x0, fig_bottom, x1, fig_bottom + s / 2 + 1, kScooterGray);
    fill_rect(base.image, x1 - s / 2, spec.margin_top + 6 * s, x1, fig_bottom, kScooterGray);
    fill_rect(base.image, x1 - 2 * s, spec.margin_top + 6 * s, x1 + s / 2,
              spec.margin_top + 6 * s + s / 2, kScooterGray);
    fill_rect(base.image, x0, fig_bottom, x0 + s, fig_bottom + s + 1, kScooterGray);
    fill_rect(base.image, x1 - s, fig_bottom, x1, fig_bottom + s + 1, kScooterGray);
  }

  for (int p = 0; p < kNumParts; ++p) {
    const PixelRect& r = parts[p];
    fill_rect(base.image, r.x, r.y, r.x + r.w, r.y + r.h, kPartColors[p]);
    for (int y = r.y; y < r.y + r.h; ++y) {
      for (int x = r.x; x < r.x + r.w; ++x) base.part_map.at(x, y) = part_code(static_cast<PartId>(p));
    }
  }

  const double ox = spec.margin_left;
  const double oy = spec.margin_top;
  const double u = s;
  const std::array<std::pair<double, double>, kCoco17Keypoints> layout = {{
      {3.5, 1.8},    // nose
      {4.0, 1.2},    // left eye
      {3.0, 1.2},    // right eye
      {4.7, 1.5},    // left ear
      {2.3, 1.5},    // right ear
      {5.2, 3.4},    // left shoulder
      {1.8, 3.4},    // right shoulder
      {6.25, 5.5},   // left elbow
      {0.75, 5.5},   // right elbow
      {6.25, 8.5},   // left wrist
      {0.75, 8.5},   // right wrist
      {4.5, 11.8},   // left hip
      {2.5, 11.8},   // right hip
      {4.5, 16.5},   // left knee
      {2.5, 16.5},   // right knee
      {4.5, 20.5},   // left ankle
      {2.5, 20.5},   // right ankle
  }};
  for (const auto& [kx, ky] : layout) {
    base.keypoints.push_back({ox + kx * u, oy + ky * u, Visibility::kLabeledVisible});
  }
  return base;
}

ComposedInstance as_composed(const BaseInstance& base) {
  return ComposedInstance{base.image, base.part_map, instance_mask(base.part_map), base.keypoints};
}

ComposedInstance composite(const BaseInstance& base, const OccluderAsset& occ, const Placement& p) {
  if (!(p.scale > 0.0) || !std::isfinite(p.scale)) {
    throw Error(ErrorCode::kInvalidConfig, "placement scale must be > 0");
  }
  const RgbaImage scaled = resample_nearest(occ.image, p.scale);
  const int ox = static_cast<int>(std::lround(p.x));
  const int oy = static_cast<int>(std::lround(p.y));
  if (!overlaps_image(ox, oy, scaled.width(), scaled.height(), base.image.width(),
                      base.image.height())) {
    throw Error(ErrorCode::kNoOverlap, "occluder '" + occ.id + "' placed outside the image");
  }
  ComposedInstance out = as_composed(base);
  kernels::composite(out.image, scaled, ox, oy, &out.part_map, &out.mask);
  for (Keypoint& kp : out.keypoints) {
    if (kp.v == Visibility::kNotLabeled) continue;
    const int px = static_cast<int>(std::floor(kp.x)) - ox;
    const int py = static_cast<int>(std::floor(kp.y)) - oy;
    if (scaled.contains(px, py) && scaled.at(px, py).a >= kAlphaOpaque) {
      kp.v = Visibility::kLabeledOccluded;
    }
  }
  return out;
}

double achieved_occlusion(const ComposedInstance& composed, const PartWeightTable& weights) {
  return occlusion_level(part_visibility_from_part_map(composed.part_map), weights);
}

double placement_occlusion(const BaseInstance& base, const RgbaImage& scaled_occluder, int ox,
                           int oy, const PartWeightTable& weights) {
  return level_from_histogram(base_histogram(base),
                              kernels::covered_by(base.part_map, scaled_occluder, ox, oy), weights);
}

std::string_view policy_name(SearchPolicy p) {
  return p == SearchPolicy::kGridBisect ? "grid_bisect" : "random";
}

SearchPolicy parse_policy(std::string_view name) {
  if (name == "grid_bisect") return SearchPolicy::kGridBisect;
  if (name == "random") return SearchPolicy::kRandom;
  throw Error(ErrorCode::kInvalidConfig, "unknown search policy '" + std::string(name) + "'");
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

PlacementResult solve_placement(const BaseInstance& base, const OccluderAsset& occ,
                                const SynthesisSpec& spec, const PartWeightTable& weights) {
  if (spec.target_bin < 0 || spec.target_bin >= kNumBins) {
    throw Error(ErrorCode::kOutOfRange, "target_bin must be in 0..9");
  }
  if (spec.max_attempts < 1 || spec.scale_steps < 1 || spec.grid_points < 2 ||
      !(spec.min_scale > 0.0) || !(spec.max_scale >= spec.min_scale)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid synthesis spec");
  }
  weights.validate();
  const double band_lo = 10.0 * spec.target_bin;
  const double band_hi = band_lo + 10.0;
  auto in_band = [&](double v) { return v >= band_lo && v < band_hi && v < 100.0; };

  const kernels::PartHistogram totals = base_histogram(base);
  std::int64_t fig_area = 0;
  for (const auto t : totals.total) fig_area += t;
  if (fig_area == 0) throw Error(ErrorCode::kInfeasible, "base '" + base.id + "' has no part pixels");

  const double max_footprint =
      static_cast<double>(occ.footprint_pixels()) * spec.max_scale * spec.max_scale;
  if (band_lo > 0.0 && max_footprint < band_lo / 100.0 * static_cast<double>(fig_area)) {
    throw Error(ErrorCode::kInfeasible, "occluder '" + occ.id + "' too small for bin " +
                                            std::to_string(spec.target_bin));
  }

  const PixelRect fig = to_pixel_rect(base.bbox);
  const int fig_bottom = fig.y + fig.h;
  const int width = base.image.width();
  const int height = base.image.height();
  std::mt19937_64 rng(spec.seed);
  int attempts = 0;

  struct Eval {
    bool ok;
    double value;
  };
  auto evaluate = [&](const RgbaImage& scaled, int x, int y) -> Eval {
    if (!overlaps_image(x, y, scaled.width(), scaled.height(), width, height)) return {false, 0.0};
    if (attempts >= spec.max_attempts) {
      throw Error(ErrorCode::kInfeasible, "attempt budget exhausted for bin " +
                                              std::to_string(spec.target_bin));
    }
    ++attempts;
    return {true, level_from_histogram(totals, kernels::covered_by(base.part_map, scaled, x, y),
                                       weights)};
  };
  auto done = [&](double scale, int x, int y, double v) {
    return PlacementResult{Placement{static_cast<double>(x), static_cast<double>(y), scale}, v,
                           attempts};
  };

  if (spec.policy == SearchPolicy::kRandom) {
    while (attempts < spec.max_attempts) {
      const double scale = spec.min_scale + (spec.max_scale - spec.min_scale) * unit_uniform(rng);
      const RgbaImage scaled = resample_nearest(occ.image, scale);
      const int x = pick_x(rng, fig, scaled.width());
      const int y_full = fig_bottom - scaled.height();
      const int y_zero = std::min(fig_bottom, height - 1);
      const int y = y_full + static_cast<int>(std::floor(unit_uniform(rng) * (y_zero - y_full + 1)));
      const Eval e = evaluate(scaled, x, std::min(y, y_zero));
      if (e.ok && in_band(e.value)) return done(scale, x, std::min(y, y_zero), e.value);
    }
    throw Error(ErrorCode::kInfeasible, "attempt budget exhausted for bin " +
                                            std::to_string(spec.target_bin));
  }

  // Grid + bisection. With the occluder's bottom at or below the figure's
  // feet, coverage is non-increasing in the vertical offset.
  // First pass at a seeded lateral offset, second pass centered on the
  // figure (an off-center wide occluder can miss the top bins).
  const std::vector<double> ladder = scale_ladder(spec);
  std::vector<int> random_x(ladder.size());
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t si = 0; si < ladder.size(); ++si) {
      const double scale = ladder[si];
      const RgbaImage scaled = resample_nearest(occ.image, scale);
      if (pass == 0) random_x[si] = pick_x(rng, fig, scaled.width());
      const int centered = fig.x + (fig.w - scaled.width()) / 2;
      if (pass == 1 && centered == random_x[si]) continue;
      const int x = pass == 0 ? random_x[si] : centered;
      const int y_full = fig_bottom - scaled.height();
      const int y_zero = std::min(fig_bottom, height - 1);
      if (y_full >= y_zero) continue;

      std::vector<int> grid;
      for (int i = 0; i < spec.grid_points; ++i) {
        const int y = y_full + static_cast<int>(std::lround(
                                   i * static_cast<double>(y_zero - y_full) / (spec.grid_points - 1)));
        if (grid.empty() || grid.back() != y) grid.push_back(y);
      }

      std::optional<int> above;  // last offset with coverage at or above the band
      for (const int y : grid) {
        const Eval e = evaluate(scaled, x, y);
        if (!e.ok) continue;
        if (in_band(e.value)) return done(scale, x, y, e.value);
        if (e.value >= band_hi) {
          above = y;
          continue;
        }
        if (!above) break;  // even the deepest placement stays below the band
        int a = *above;
        int b = y;
        while (b - a > 1) {
          const int m = a + (b - a) / 2;
          const Eval mid = evaluate(scaled, x, m);
          if (!mid.ok) break;
          if (in_band(mid.value)) return done(scale, x, m, mid.value);
          if (mid.value >= band_hi) {
            a = m;
          } else {
            b = m;
          }
        }
        break;
      }
    }
  }
  // Last resort: the whole vertical range at the centered offset. Coverage
  // is no longer monotone here, so bisect inside any grid step that jumps
  // across the band.
  for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
    const double scale = *it;
    const RgbaImage scaled = resample_nearest(occ.image, scale);
    const int x = fig.x + (fig.w - scaled.width()) / 2;
    const int y_top = fig.y - scaled.height() + 1;
    const int y_zero = std::min(fig_bottom, height - 1);
    const int steps = 2 * spec.grid_points;
    std::vector<std::pair<int, double>> samples;
    for (int i = 0; i <= steps; ++i) {
      const int y = y_top + static_cast<int>(std::lround(i * static_cast<double>(y_zero - y_top) / steps));
      if (!samples.empty() && samples.back().first == y) continue;
      const Eval e = evaluate(scaled, x, y);
      if (!e.ok) continue;
      if (in_band(e.value)) return done(scale, x, y, e.value);
      samples.emplace_back(y, e.value);
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
      auto [ya, va] = samples[i - 1];
      auto [yb, vb] = samples[i];
      if ((va >= band_hi) == (vb >= band_hi)) continue;
      // Invariant: ya is above the band, yb below it.
      if (vb >= band_hi) std::swap(ya, yb);
      while (std::abs(yb - ya) > 1) {
        const int m = ya + (yb - ya) / 2;
        const Eval mid = evaluate(scaled, x, m);
        if (!mid.ok) break;
        if (in_band(mid.value)) return done(scale, x, m, mid.value);
        if (mid.value >= band_hi) {
          ya = m;
        } else {
          yb = m;
        }
      }
    }
  }
  throw Error(ErrorCode::kInfeasible, "no placement of '" + occ.id + "' reaches bin " +
                                          std::to_string(spec.target_bin));
}

ComposedInstance recompose(const BaseInstance& base, const OccluderAsset* occ,
                           const SynthesisRecord& record) {
  if (record.occluder_id.empty() || occ == nullptr) return as_composed(base);
  return composite(base, *occ, record.placement);
}

SynthesisOutput synthesize_dataset(const std::vector<BaseInstance>& bases,
                                   const std::vector<OccluderAsset>& occluders,
                                   const SynthesisPlan& plan, const PartWeightTable& weights) {
  struct Job {
    int bin;
    int k;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  std::mt19937_64 seeder(plan.seed);
  for (int bin = 0; bin < kNumBins; ++bin) {
    if (plan.quotas[bin] < 0) throw Error(ErrorCode::kInvalidConfig, "negative quota");
    for (int k = 0; k < plan.quotas[bin]; ++k) jobs.push_back({bin, k, seeder()});
  }
  if (!jobs.empty() && bases.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "synthesis needs at least one base instance");
  }
  weights.validate();

  struct Result {
    GroundTruthInstance instance;
    ComposedInstance composed;
  };
  std::vector<std::optional<Result>> results(jobs.size());
  const std::int64_t n_jobs = static_cast<std::int64_t>(jobs.size());

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t n = 0; n < n_jobs; ++n) {
    const Job& job = jobs[n];
    const BaseInstance& base = bases[n % bases.size()];
    try {
      std::optional<ComposedInstance> composed;
      SynthesisRecord record{base.id, "", Placement{}, job.seed, job.bin};
      if (occluders.empty()) {
        if (job.bin == 0) composed = as_composed(base);
      } else {
        for (std::size_t t = 0; t < occluders.size() && !composed; ++t) {
          const OccluderAsset& occ = occluders[(n + t) % occluders.size()];
          SynthesisSpec spec;
          spec.target_bin = job.bin;
          spec.seed = job.seed + t;
          spec.max_attempts = plan.max_attempts;
          spec.policy = plan.policy;
          spec.min_scale = plan.min_scale;
          spec.max_scale = plan.max_scale;
          try {
            const PlacementResult found = solve_placement(base, occ, spec, weights);
            record.occluder_id = occ.id;
            record.placement = found.placement;
            record.seed = spec.seed;
            composed = composite(base, occ, found.placement);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kInfeasible) throw;
          }
        }
      }
      if (!composed) continue;
      const double pct = achieved_occlusion(*composed, weights);
      if (!(pct < 100.0) || bin_of(pct) != job.bin) continue;

      GroundTruthInstance inst;
      inst.id = format_id(job.bin, job.k);
      inst.image = ImageRef{"images/" + inst.id + ".png", composed->image.width(),
                            composed->image.height()};
      inst.bbox = base.bbox;
      inst.label = base.label;
      inst.keypoints = composed->keypoints;
      inst.mask_path = "masks/" + inst.id + ".png";
      inst.part_map_path = "parts/" + inst.id + ".png";
      inst.occlusion_pct = pct;
      inst.occlusion_bin = job.bin;
      inst.provenance = "synthesized from base '" + base.id + "'" +
                        (record.occluder_id.empty() ? std::string(" without occluder")
                                                    : " with occluder '" + record.occluder_id + "'");
      inst.synthesis = record;
      results[n] = Result{std::move(inst), std::move(*composed)};
    } catch (const Error&) {
      // Counted as a shortfall below.
    }
  }

  std::array<int, kNumBins> made{};
  for (std::size_t n = 0; n < jobs.size(); ++n) {
    if (results[n]) ++made[jobs[n].bin];
  }
  std::ostringstream shortfall;
  for (int bin = 0; bin < kNumBins; ++bin) {
    if (made[bin] < plan.quotas[bin]) {
      shortfall << " bin " << bin << ": " << made[bin] << "/" << plan.quotas[bin] << ";";
    }
  }
  if (!shortfall.str().empty()) {
    throw Error(ErrorCode::kQuotaUnmet, "quota not met:" + shortfall.str());
  }

  SynthesisOutput out;
  out.manifest.metadata["generator"] = "escooter synthesize";
  out.manifest.metadata["toolkit_version"] = ESCOOTER_VERSION;
  out.manifest.metadata["seed"] = std::to_string(plan.seed);
  out.manifest.metadata["search_policy"] = std::string(policy_name(plan.policy));
  for (auto& r : results) {
    out.images.push_back({r->instance.id, std::move(r->composed)});
    out.manifest.instances.push_back(std::move(r->instance));
  }
  return out;
}

void write_synthesis(const std::filesystem::path& dir, const SynthesisOutput& out) {
  std::filesystem::create_directories(dir / "images");
  std::filesystem::create_directories(dir / "masks");
  std::filesystem::create_directories(dir / "parts");
  const std::int64_t n = static_cast<std::int64_t>(out.images.size());
  std::vector<std::string> errors(out.images.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& img = out.images[i];
    const auto& inst = out.manifest.instances[i];
    try {
      write_png(dir / inst.image.path, img.composed.image);
      write_png(dir / *inst.mask_path, img.composed.mask);
      write_png(dir / *inst.part_map_path, img.composed.part_map);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::kIo, e);
  }
  save_manifest(dir / "manifest.json", out.manifest);
}

}  // namespace escooter
