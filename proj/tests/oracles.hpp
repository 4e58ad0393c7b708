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

// Reference implementations the tests compare the library against. They
// are written from the definitions, favouring obviousness over speed, and
// share no code with src/ beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "escooter/domain.hpp"
#include "escooter/evaluation.hpp"
#include "escooter/image.hpp"

namespace oracle {

using escooter::BBox;

// (x - w, y, 3w, h + h/4) spelled differently: 1.25h and w * 3 are the
// same correctly rounded reals as h + h/4 and 3w.
inline BBox expand_fixed(const BBox& b) { return BBox{b.x - b.w, b.y, b.w * 3, b.h * 1.25}; }

inline double iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}

inline BBox random_box(std::mt19937_64& rng, double extent = 100.0) {
  const double w = uniform(rng, 1.0, extent / 2);
  const double h = uniform(rng, 1.0, extent / 2);
  return BBox{uniform(rng, 0.0, extent - w), uniform(rng, 0.0, extent - h), w, h};
}

// Enumerates every one-to-one partial assignment of candidates to GT with
// IoU >= threshold and keeps the lexicographic best, visiting candidates
// by descending score (ties by input order) and ranking each candidate's
// option by (IoU, lower GT index), with "unmatched" below everything.
inline std::vector<std::optional<int>> exhaustive_match(const std::vector<BBox>& gt,
                                                        const std::vector<BBox>& cand,
                                                        const std::vector<double>& score, double thr) {
  std::vector<int> order(cand.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] > score[b]; });

  using Key = std::vector<std::pair<double, int>>;  // per visited candidate
  Key best_key;
  std::vector<std::optional<int>> best(cand.size());
  std::vector<std::optional<int>> cur(cand.size());
  std::vector<bool> used(gt.size(), false);
  Key key;
  bool have_best = false;

  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == order.size()) {
      if (!have_best || key > best_key) {
        best_key = key;
        best = cur;
        have_best = true;
      }
      return;
    }
    const int c = order[depth];
    key.push_back({-1.0, 0});
    cur[c].reset();
    self(self, depth + 1);
    key.pop_back();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g]) continue;
      const double v = oracle::iou(cand[c], gt[g]);
      if (v < thr) continue;
      used[g] = true;
      cur[c] = static_cast<int>(g);
      key.push_back({v, -static_cast<int>(g)});
      self(self, depth + 1);
      key.pop_back();
      cur[c].reset();
      used[g] = false;
    }
  };
  recurse(recurse, 0);
  return best;
}

struct Outcome {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// Direct reading of the counting rules, one bin array per call.
inline std::vector<Outcome> count_outcomes(const std::vector<escooter::EvalGt>& gt,
                                           const std::vector<escooter::EvalCandidate>& cand,
                                           const std::vector<std::optional<int>>& cand_to_gt) {
  std::vector<Outcome> bins(escooter::kNumBins);
  for (std::size_t g = 0; g < gt.size(); ++g) {
    std::optional<int> who;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      if (cand_to_gt[c] && *cand_to_gt[c] == static_cast<int>(g)) who = static_cast<int>(c);
    }
    const bool says_rider = who && cand[*who].rider;
    const bool is_rider = gt[g].label == escooter::ClassLabel::kEscooterRider;
    Outcome& o = bins[gt[g].bin];
    if (is_rider && says_rider) ++o.tp;
    if (is_rider && !says_rider) ++o.fn;
    if (!is_rider && says_rider) ++o.fp;
    if (!is_rider && !says_rider) ++o.tn;
  }
  for (std::size_t c = 0; c < cand.size(); ++c) {
    if (cand_to_gt[c] || !cand[c].rider) continue;
    if (gt.empty()) {
      ++bins[0].fp;
      continue;
    }
    // Highest IoU, then nearest center, then first.
    std::size_t pick = 0;
    for (std::size_t g = 1; g < gt.size(); ++g) {
      const double a = oracle::iou(cand[c].box, gt[g].box);
      const double b = oracle::iou(cand[c].box, gt[pick].box);
      auto dist = [&](std::size_t k) {
        const double dx = (gt[k].box.x + gt[k].box.w / 2) - (cand[c].box.x + cand[c].box.w / 2);
        const double dy = (gt[k].box.y + gt[k].box.h / 2) - (cand[c].box.y + cand[c].box.h / 2);
        return dx * dx + dy * dy;
      };
      if (a > b || (a == b && dist(g) < dist(pick))) pick = g;
    }
    ++bins[gt[pick].bin].fp;
  }
  return bins;
}

// Nearest-neighbour resampling from the pixel-centre definition.
inline escooter::RgbaImage resample(const escooter::RgbaImage& src, double scale) {
  const int w = std::max(1, static_cast<int>(std::lround(src.width() * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(src.height() * scale)));
  escooter::RgbaImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(src.width() - 1, static_cast<int>(std::floor((x + 0.5) / scale)));
      const int sy = std::min(src.height() - 1, static_cast<int>(std::floor((y + 0.5) / scale)));
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

}  // namespace oracle
