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

// Acceptance checks. One PASS/FAIL line per criterion; exits nonzero when
// any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "escooter/annotation.hpp"
#include "escooter/backends.hpp"
#include "escooter/commands.hpp"
#include "escooter/error.hpp"
#include "escooter/evaluation.hpp"
#include "escooter/geometry.hpp"
#include "escooter/pipeline.hpp"
#include "escooter/synthesizer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace escooter;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void check(const char* id, const char* name, const std::function<Outcome()>& body, double budget_s = 0.0) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0.0 && secs >= budget_s) {
    o.pass = false;
    o.detail += " (over time budget)";
  }
  char timing[64];
  std::snprintf(timing, sizeof timing, "%.3fs", secs);
  std::printf("%s %s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), timing);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

bool bit_equal(const BBox& a, const BBox& b) { return std::memcmp(&a, &b, sizeof(BBox)) == 0; }

BBox fuzz_box(std::mt19937_64& rng) {
  const double w = oracle::uniform(rng, 0.5, 400.0);
  // A quarter of boxes sit exactly on the gate boundary.
  const double h = rng() % 4 == 0 ? 2.5 * w : oracle::uniform(rng, 0.5, 1000.0);
  return BBox{oracle::uniform(rng, -50.0, 2000.0), oracle::uniform(rng, -50.0, 1000.0), w, h};
}

Outcome expansion_exact() {
  std::mt19937_64 rng(1);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const BBox b = fuzz_box(rng);
    if (!bit_equal(expand_baseline(b), oracle::expand_fixed(b))) ++bad;
  }
  return {bad == 0, std::to_string(1000 - bad) + "/1000 bit-exact"};
}

Outcome gate_contract() {
  std::mt19937_64 rng(2);
  const ExpansionConfig cfg;
  int bad = 0, gated = 0, boundary = 0;
  for (int i = 0; i < 1000; ++i) {
    const BBox b = fuzz_box(rng);
    const bool expect = b.h < 2.5 * b.w;
    boundary += b.h == 2.5 * b.w;
    if (aspect_gate(b, cfg) != expect) {
      ++bad;
      continue;
    }
    const BBox aware = expand_occlusion_aware(b, cfg);
    const BBox base = expand_baseline(b);
    if (expect) {
      ++gated;
      if (!(aware.h > base.h)) ++bad;
    } else if (!(aware == base)) {
      ++bad;
    }
  }
  return {bad == 0, std::to_string(bad) + " violations; " + std::to_string(gated) + " gated, " +
                        std::to_string(boundary) + " on the boundary"};
}

Outcome accuracy_oracle() {
  std::mt19937_64 rng(3);
  int bad = 0;
  for (int i = 0; i < 500; ++i) {
    ConfusionCounts c{static_cast<std::int64_t>(rng() % 400), static_cast<std::int64_t>(rng() % 400),
                      static_cast<std::int64_t>(rng() % 400), static_cast<std::int64_t>(rng() % 400)};
    if (c.total() == 0) c.tp = 1;
    // Expand to individual outcomes and count the correct ones.
    std::vector<char> outcomes;
    outcomes.insert(outcomes.end(), c.tp, 'P');
    outcomes.insert(outcomes.end(), c.tn, 'N');
    outcomes.insert(outcomes.end(), c.fp, 'f');
    outcomes.insert(outcomes.end(), c.fn, 'n');
    std::int64_t correct = 0;
    for (char o : outcomes) correct += (o == 'P' || o == 'N');
    if (accuracy(c) != static_cast<double>(correct) / static_cast<double>(outcomes.size())) ++bad;
  }
  const std::string shown = format_accuracy(accuracy(ConfusionCounts{677, 0, 453, 0}));
  return {bad == 0 && shown == "0.599", std::to_string(500 - bad) + "/500 exact; 677/1130 -> " + shown};
}

BinMetricsTable fixture(const std::string& name) {
  return load_table(std::filesystem::path(ESCOOTER_TEST_DATA) / name);
}

Outcome improvement() {
  const Comparison c = compare_runs(fixture("overall_occlusion_aware.json"), fixture("overall_baseline.json"));
  const double gap = std::abs(c.overall_delta_pp - 15.93);
  return {gap <= 0.1 && format_accuracy(c.accuracy_a) == "0.599" && format_accuracy(c.accuracy_b) == "0.439",
          format_accuracy(c.accuracy_a) + " vs " + format_accuracy(c.accuracy_b) + ", delta " +
              format_pp(c.overall_delta_pp) + " pp (|delta - 15.93| = " + format_pp(gap) + ")"};
}

Outcome binning() {
  const std::pair<double, int> table[] = {{0.0, 0}, {9.99, 0}, {10.0, 1}, {95.0, 9}};
  std::string detail;
  bool ok = true;
  for (const auto& [pct, bin] : table) {
    const int got = bin_of(pct);
    ok = ok && got == bin;
    detail += format_fixed(pct, 2) + "->" + std::to_string(got) + " ";
  }
  try {
    bin_of(100.0);
    ok = false;
    detail += "100->no error";
  } catch (const Error& e) {
    ok = ok && e.code() == ErrorCode::kOutOfRange;
    detail += "100->" + std::string(error_code_name(e.code()));
  }
  return {ok, detail};
}

double pixel_count_occlusion(const UniformFigureSpec& spec, const OccluderAsset& occ, const Placement& p) {
  const RgbaImage scaled = oracle::resample(occ.image, p.scale);
  const int ox = static_cast<int>(std::lround(p.x));
  const int oy = static_cast<int>(std::lround(p.y));
  std::int64_t total = 0, covered = 0;
  for (const PixelRect& r : uniform_figure_parts(spec)) {
    for (int y = r.y; y < r.y + r.h; ++y) {
      for (int x = r.x; x < r.x + r.w; ++x) {
        ++total;
        const int sx = x - ox, sy = y - oy;
        covered += sx >= 0 && sy >= 0 && sx < scaled.width() && sy < scaled.height() &&
                   scaled.at(sx, sy).a >= kAlphaOpaque;
      }
    }
  }
  return 100.0 * static_cast<double>(covered) / static_cast<double>(total);
}

Outcome annotation_oracle() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    UniformFigureSpec spec;
    spec.unit = 4 * (1 + static_cast<int>(rng() % 4));
    spec.label = i % 2 ? ClassLabel::kOtherVru : ClassLabel::kEscooterRider;
    const BaseInstance base = make_uniform_figure("fig" + std::to_string(i), spec);
    const int w = 8 + static_cast<int>(rng() % 120), h = 8 + static_cast<int>(rng() % 200);
    const OccluderAsset occ = rng() % 2 ? make_box_occluder("o", w, h, Rgba{40, 40, 40, 255}, OccluderCategory::kOther)
                                        : make_ellipse_occluder("o", w, h, Rgba{40, 40, 40, 255}, OccluderCategory::kOther);
    const Placement p{oracle::uniform(rng, -0.5 * w, base.image.width() - 1.0),
                      oracle::uniform(rng, -0.5 * h, base.image.height() - 1.0), oracle::uniform(rng, 0.5, 1.5)};
    const double weighted = achieved_occlusion(composite(base, occ, p));
    worst = std::max(worst, std::abs(weighted - pixel_count_occlusion(spec, occ, p)));
  }
  return {worst <= 0.5, "max |weighted - pixel| = " + format_fixed(worst, 4) + " pp over 100 figures"};
}

// Bins a base/occluder pair can land in at all: every placement on a
// 2-pixel lattice at each scale of the solver's ladder.
std::array<bool, kNumBins> reachable_bins(const BaseInstance& base, const OccluderAsset& occ) {
  std::array<bool, kNumBins> reach{};
  const SynthesisSpec defaults;
  for (int i = 0; i < defaults.scale_steps; ++i) {
    const double scale =
        defaults.min_scale + (defaults.max_scale - defaults.min_scale) * i / (defaults.scale_steps - 1.0);
    const RgbaImage scaled = oracle::resample(occ.image, scale);
    for (int y = 1 - scaled.height(); y < base.image.height(); y += 2) {
      for (int x = 1 - scaled.width(); x < base.image.width(); x += 2) {
        const double v = placement_occlusion(base, scaled, x, y, PartWeightTable::toolkit_default());
        if (v < 100.0) reach[bin_of(v)] = true;
      }
      if (std::all_of(reach.begin(), reach.end(), [](bool b) { return b; })) return reach;
    }
  }
  return reach;
}

Outcome band_guarantee() {
  const auto bases = builtin_bases();
  const auto occluders = builtin_occluders();
  // Trials only use pairs that can reach the band; the rest are reported.
  std::array<std::vector<std::pair<std::size_t, std::size_t>>, kNumBins> pairs;
  int excluded = 0;
  for (std::size_t b = 0; b < bases.size(); ++b) {
    for (std::size_t o = 0; o < occluders.size(); ++o) {
      const auto reach = reachable_bins(bases[b], occluders[o]);
      for (int bin = 0; bin < kNumBins; ++bin) {
        if (reach[bin]) {
          pairs[bin].emplace_back(b, o);
        } else {
          ++excluded;
        }
      }
    }
  }
  std::string detail;
  bool ok = true;
  for (int bin = 0; bin < kNumBins; ++bin) {
    int hit = 0;
    for (int t = 0; t < 100 && !pairs[bin].empty(); ++t) {
      SynthesisSpec spec;
      spec.target_bin = bin;
      spec.seed = 7919ULL * static_cast<std::uint64_t>(bin) + static_cast<std::uint64_t>(t);
      const auto [b, o] = pairs[bin][static_cast<std::size_t>(t) % pairs[bin].size()];
      try {
        const PlacementResult r = solve_placement(bases[b], occluders[o], spec);
        hit += bin_of(r.achieved_pct) == bin;
      } catch (const Error&) {
      }
    }
    ok = ok && hit >= 95;
    detail += std::to_string(hit) + (bin + 1 < kNumBins ? "," : "");
  }
  // Emit a manifest and re-verify it from disk.
  testutil::TempDir dir;
  SynthesisPlan plan;
  plan.quotas = {10, 10, 10, 10, 10, 10, 10, 10, 10, 10};
  plan.seed = 99;
  const SynthesisOutput out = synthesize_dataset(bases, occluders, plan);
  write_synthesis(dir.path(), out);
  const AnnotationReport report = annotate_manifest(load_manifest(dir / "manifest.json"), dir.path(),
                                                    PartWeightTable::toolkit_default(), PartMode::kFractional, 0.5);
  double max_gap = 0.0;
  bool all_recomputed = report.skipped == 0;
  for (const auto& row : report.rows) {
    if (!row.gap_pp) {
      all_recomputed = false;
      continue;
    }
    max_gap = std::max(max_gap, std::abs(*row.gap_pp));
  }
  ok = ok && report.flagged == 0 && all_recomputed && max_gap == 0.0;
  return {ok, "hits per bin [" + detail + "]/100 (" + std::to_string(excluded) + " unreachable pair-bins skipped); " + std::to_string(report.rows.size()) +
                  " instances re-annotated, max drift " + format_fixed(max_gap, 4) + " pp"};
}

Outcome matching_oracle() {
  std::mt19937_64 rng(8);
  int bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int ng = static_cast<int>(rng() % 6), nc = static_cast<int>(rng() % 6);
    std::vector<EvalGt> gt;
    std::vector<EvalCandidate> cand;
    std::vector<BBox> gb, cb;
    std::vector<double> score;
    for (int i = 0; i < ng; ++i) {
      gb.push_back(oracle::random_box(rng, 40.0));
      gt.push_back({gb.back(), ClassLabel::kEscooterRider, 0});
    }
    for (int i = 0; i < nc; ++i) {
      cb.push_back(oracle::random_box(rng, 40.0));
      // Coarse scores so ties are common.
      score.push_back(static_cast<double>(rng() % 5) / 4.0);
      cand.push_back({cb.back(), score.back(), true});
    }
    const double thr = trial % 3 == 0 ? 0.1 : 0.5;
    if (match_predictions(gt, cand, thr).candidate_to_gt != oracle::exhaustive_match(gb, cb, score, thr)) ++bad;
  }
  return {bad == 0, std::to_string(10000 - bad) + "/10000 agree"};
}

Outcome oracle_ceiling() {
  testutil::TempDir dir;
  SynthesisPlan plan;
  plan.quotas = {10, 10, 10, 10, 10, 10, 10, 10, 10, 10};
  plan.seed = 4242;
  const SynthesisOutput out = synthesize_dataset(builtin_bases(), builtin_occluders(), plan);
  write_synthesis(dir.path(), out);
  const DatasetManifest m = load_manifest(dir / "manifest.json");
  const ManifestStats stats = manifest_stats(m);

  OracleDetector det(m);
  OracleClassifier cls(m);
  const Evaluation perfect = evaluate_run(m, run_dataset(m, dir.path(), PipelineConfig{}, det, cls));
  bool ok = m.instances.size() == 100 && accuracy(perfect.table.overall()) == 1.0;
  for (const auto& b : perfect.table.bins) ok = ok && b.fn == 0 && b.fp == 0;

  ConstantClassifier never(0.0);
  const Evaluation none = evaluate_run(m, run_dataset(m, dir.path(), PipelineConfig{}, det, never));
  std::string fns;
  for (int b = 0; b < kNumBins; ++b) {
    ok = ok && none.table.bins[b].fn == stats.counts[b][static_cast<int>(ClassLabel::kEscooterRider)];
    fns += std::to_string(none.table.bins[b].fn) + (b + 1 < kNumBins ? "," : "");
  }
  return {ok, "oracle accuracy " + format_accuracy(accuracy(perfect.table.overall())) + " on " +
                  std::to_string(m.instances.size()) + " instances; all-not FN per bin [" + fns + "] = rider counts"};
}

// synthesize -> run (two modes) -> evaluate -> compare into `dir`.
void full_chain(const std::filesystem::path& dir) {
  std::ostringstream sink;
  write_file(dir / "plan.json", R"({"quotas": [4, 4, 4, 4, 4, 4, 4, 4, 4, 4], "seed": 31337})");
  ToolkitConfig cfg;
  cmd_synthesize(dir / "plan.json", dir / "syn", cfg, sink);
  const auto manifest = dir / "syn" / "manifest.json";
  std::vector<std::filesystem::path> tables;
  for (const PipelineMode mode : {PipelineMode::kOcclusionAware, PipelineMode::kBaseline}) {
    ToolkitConfig c = cfg;
    c.pipeline.mode = mode;
    const std::string name(mode_name(mode));
    cmd_run(manifest, dir / (name + "_run.json"), "oracle",
            mode == PipelineMode::kBaseline ? "constant:0.3" : "oracle", c, sink);
    cmd_evaluate(manifest, dir / (name + "_run.json"), dir / name, "", c, sink);
    tables.push_back(dir / name / "metrics.json");
  }
  cmd_compare(tables, dir / "compare", sink);
}

Outcome determinism() {
  testutil::TempDir a, b;
  full_chain(a.path());
  full_chain(b.path());
  int files = 0, diff = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    ++files;
    if (!std::filesystem::exists(b.path() / rel) || read_file(e.path()) != read_file(b.path() / rel)) ++diff;
  }
  int files_b = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(b.path())) files_b += e.is_regular_file();
  return {diff == 0 && files == files_b && files > 0,
          std::to_string(files) + " files compared, " + std::to_string(diff) + " differ"};
}

Outcome fp_totals() {
  const std::vector<BinMetricsTable> runs{fixture("fp_squeezenet1_0.json"), fixture("fp_alexnet.json")};
  const auto counts = fp_count_by_run(runs);
  const auto back = fp_counts_from_csv(fp_counts_csv(runs));
  // Also through the compare command's on-disk report.
  testutil::TempDir dir;
  std::ostringstream sink;
  cmd_compare({std::filesystem::path(ESCOOTER_TEST_DATA) / "fp_squeezenet1_0.json",
               std::filesystem::path(ESCOOTER_TEST_DATA) / "fp_alexnet.json"},
              dir.path(), sink);
  const auto from_disk = fp_counts_from_csv(read_file(dir / "fp_counts.csv"));
  const bool ok = counts.size() == 2 && counts[0].total == 87 && counts[1].total == 57 && back == counts &&
                  from_disk == counts;
  return {ok, counts[0].label + " " + std::to_string(counts[0].total) + ", " + counts[1].label + " " +
                  std::to_string(counts[1].total) + "; CSV round trip " + (back == counts && from_disk == counts ? "unchanged" : "changed")};
}

}  // namespace

int main() {
  check("1", "baseline expansion exactness", expansion_exact, 1.0);
  check("2", "aspect gate and expansion contract", gate_contract);
  check("3", "accuracy vs brute-force count", accuracy_oracle);
  check("4", "improvement delta on fixtures", improvement);
  check("5", "occlusion bin boundaries", binning);
  check("6", "weighted vs pixel-count occlusion", annotation_oracle, 10.0);
  check("7", "placement band guarantee and re-annotation", band_guarantee, 60.0);
  check("8", "greedy vs exhaustive matching", matching_oracle);
  check("9", "oracle ceiling and all-negative classifier", oracle_ceiling);
  check("10", "run/evaluate/compare determinism", determinism);
  check("11", "false-positive totals round trip", fp_totals);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
