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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "escooter/annotation.hpp"
#include "escooter/evaluation.hpp"
#include "escooter/kernels.hpp"
#include "escooter/synthesizer.hpp"

namespace {

using namespace escooter;

GrayImage part_map(int w, int h) {
  std::mt19937_64 rng(1);
  GrayImage m(w, h, 0);
  for (auto& px : m.data()) px = static_cast<std::uint8_t>(rng() % 7);
  return m;
}

RgbaImage occluder(int w, int h) {
  return make_ellipse_occluder("o", w, h, Rgba{60, 60, 60, 255}, OccluderCategory::kOther).image;
}

std::vector<BBox> boxes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BBox> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(BBox{u(rng) * 1800, u(rng) * 1000, 10 + u(rng) * 200, 10 + u(rng) * 400});
  return out;
}

void BM_PartHistogramSerial(benchmark::State& s) {
  const GrayImage m = part_map(static_cast<int>(s.range(0)), static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::part_histogram_serial(m.data()));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(m.data().size()));
}
void BM_PartHistogramOmp(benchmark::State& s) {
  const GrayImage m = part_map(static_cast<int>(s.range(0)), static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::part_histogram_omp(m.data()));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(m.data().size()));
}
BENCHMARK(BM_PartHistogramSerial)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_PartHistogramOmp)->Arg(256)->Arg(1024)->Arg(2048);

void BM_CoveredBySerial(benchmark::State& s) {
  const GrayImage m = part_map(1024, 1024);
  const RgbaImage o = occluder(static_cast<int>(s.range(0)), static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::covered_by_serial(m, o, 100, 100));
}
void BM_CoveredByOmp(benchmark::State& s) {
  const GrayImage m = part_map(1024, 1024);
  const RgbaImage o = occluder(static_cast<int>(s.range(0)), static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::covered_by_omp(m, o, 100, 100));
}
BENCHMARK(BM_CoveredBySerial)->Arg(128)->Arg(512);
BENCHMARK(BM_CoveredByOmp)->Arg(128)->Arg(512);

void BM_CompositeSerial(benchmark::State& s) {
  const RgbaImage base(1024, 1024, Rgba{10, 20, 30, 255});
  const RgbaImage o = occluder(512, 512);
  for (auto _ : s) {
    RgbaImage dst = base;
    kernels::composite_serial(dst, o, 200, 200, nullptr, nullptr);
    benchmark::DoNotOptimize(dst.data().data());
  }
}
void BM_CompositeOmp(benchmark::State& s) {
  const RgbaImage base(1024, 1024, Rgba{10, 20, 30, 255});
  const RgbaImage o = occluder(512, 512);
  for (auto _ : s) {
    RgbaImage dst = base;
    kernels::composite_omp(dst, o, 200, 200, nullptr, nullptr);
    benchmark::DoNotOptimize(dst.data().data());
  }
}
BENCHMARK(BM_CompositeSerial);
BENCHMARK(BM_CompositeOmp);

void BM_IouMatrixSerial(benchmark::State& s) {
  const auto a = boxes(static_cast<std::size_t>(s.range(0)), 2), b = boxes(static_cast<std::size_t>(s.range(0)), 3);
  std::vector<double> out(a.size() * b.size());
  for (auto _ : s) {
    kernels::iou_matrix_serial(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}
void BM_IouMatrixOmp(benchmark::State& s) {
  const auto a = boxes(static_cast<std::size_t>(s.range(0)), 2), b = boxes(static_cast<std::size_t>(s.range(0)), 3);
  std::vector<double> out(a.size() * b.size());
  for (auto _ : s) {
    kernels::iou_matrix_omp(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_IouMatrixSerial)->Arg(64)->Arg(512);
BENCHMARK(BM_IouMatrixOmp)->Arg(64)->Arg(512);

// Whole-path cost of one placement search.
void BM_SolvePlacement(benchmark::State& s) {
  UniformFigureSpec spec;
  spec.unit = 8;
  const BaseInstance base = make_uniform_figure("b", spec);
  const OccluderAsset occ = make_box_occluder("o", 64, 112, Rgba{1, 1, 1, 255}, OccluderCategory::kVehicle);
  SynthesisSpec ss;
  ss.target_bin = static_cast<int>(s.range(0));
  std::uint64_t seed = 0;
  for (auto _ : s) {
    ss.seed = seed++;
    benchmark::DoNotOptimize(solve_placement(base, occ, ss));
  }
}
BENCHMARK(BM_SolvePlacement)->DenseRange(0, 9, 3);

}  // namespace

BENCHMARK_MAIN();
