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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "escooter/domain.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace {

using nlohmann::json;
using testutil::quote;
using testutil::run;

const std::string kCli = ESCOOTER_CLI;
const std::filesystem::path kData = ESCOOTER_TEST_DATA;

std::string cli(const std::string& args) { return quote(kCli) + " " + args; }

// Small synthesized dataset shared by the tests below.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testutil::TempDir();
    escooter::write_file(*dir_ / "plan.json", R"({"quotas": [2, 2, 2, 2, 2, 2, 2, 2, 2, 2], "seed": 5})");
    const auto r = run(cli("synthesize --plan " + quote(*dir_ / "plan.json") + " --out-dir " + quote(*dir_ / "syn")), true);
    ASSERT_EQ(r.status, 0) << r.out;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::filesystem::path manifest() { return *dir_ / "syn" / "manifest.json"; }
  static testutil::TempDir* dir_;
};
testutil::TempDir* CliTest::dir_ = nullptr;

TEST(Cli, HelpAndVersion) {
  auto r = run(cli("--help"));
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"stats", "annotate", "synthesize", "run", "evaluate", "compare"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
  r = run(cli("run --help"));
  EXPECT_NE(r.out.find("--detector"), std::string::npos);
  EXPECT_EQ(run(cli("--version")).status, 0);
}

TEST(Cli, DumpConfigIsReloadable) {
  testutil::TempDir dir;
  const auto r = run(cli("--set pipeline.score_floor=0.3 --dump-config"));
  ASSERT_EQ(r.status, 0);
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc["pipeline"]["score_floor"], 0.3);
  escooter::write_file(dir / "c.json", r.out);
  EXPECT_EQ(run(cli("--config " + quote(dir / "c.json") + " --dump-config")).out, r.out);
}

TEST(Cli, UsageAndConfigErrorsExitOne) {
  auto r = run(cli("stats"), true);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("\"UsageError\""), std::string::npos);
  r = run(cli("--set bogus.key=1 --dump-config"), true);
  EXPECT_EQ(r.status, 1);
  const json err = json::parse(r.out);
  EXPECT_EQ(err["error"]["code"], "InvalidConfig");
  EXPECT_EQ(err["error"]["exit_status"], 1);
}

TEST(Cli, StatsOnTheBenchmarkShapedManifest) {
  const auto r = run(cli("stats --manifest " + quote(kData / "benchmark_shaped_manifest.json")));
  ASSERT_EQ(r.status, 0);
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc["classes"]["escooter_rider"], 543);
  EXPECT_EQ(doc["classes"]["other_vru"], 587);
  EXPECT_EQ(doc["total"], 1130);
  EXPECT_EQ(doc["bins"][0]["label"], "0-9%");
}

TEST_F(CliTest, AnnotateCleanAndTampered) {
  testutil::TempDir out;
  auto r = run(cli("annotate --manifest " + quote(manifest()) + " --out " + quote(out / "m.json")), true);
  EXPECT_EQ(r.status, 0) << r.out;
  json report = json::parse(escooter::read_file(out / "m_report.json"));
  EXPECT_EQ(report["flagged"], 0);

  json m = json::parse(escooter::read_file(manifest()));
  // Move the level well inside its own bin so the manifest still loads.
  json& inst = m["instances"][3];
  const double stored = inst["occlusion_pct"].get<double>();
  const double mid = inst["occlusion_bin"].get<int>() * 10.0 + 5.0;
  inst["occlusion_pct"] = std::abs(stored - mid) > 2.0 ? mid : mid + 4.0;
  // Keep the tampered copy next to the images so paths still resolve.
  const auto tampered = manifest().parent_path() / "tampered.json";
  escooter::write_file(tampered, m.dump(1));
  r = run(cli("annotate --manifest " + quote(tampered) + " --out " + quote(out / "t.json")), true);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.out.find("\"error\""), std::string::npos);
  report = json::parse(escooter::read_file(out / "t_report.json"));
  EXPECT_EQ(report["flagged"], 1);

  r = run(cli("annotate --allow-drift --manifest " + quote(tampered) + " --out " + quote(out / "t2.json")), true);
  EXPECT_EQ(r.status, 0);
}

TEST_F(CliTest, FailingBackendExitsTwo) {
  testutil::TempDir out;
  const auto r = run(cli("run --manifest " + quote(manifest()) + " --out " + quote(out / "run.json") +
                         " --detector 'exec:exit 4'"),
                     true);
  EXPECT_EQ(r.status, 2) << r.out;
  EXPECT_NE(r.out.find("BackendFailure"), std::string::npos);
}

TEST_F(CliTest, OracleRunsCompareFlat) {
  testutil::TempDir out;
  for (const char* mode : {"baseline", "occlusion_aware"}) {
    const std::string m = mode;
    ASSERT_EQ(run(cli("--set pipeline.mode=" + m + " run --manifest " + quote(manifest()) + " --out " +
                      quote(out / (m + ".json")))).status,
              0);
    ASSERT_EQ(run(cli("evaluate --manifest " + quote(manifest()) + " --run " + quote(out / (m + ".json")) +
                      " --out-dir " + quote(out / m))).status,
              0);
  }
  const auto r = run(cli("compare --table " + quote(out / "occlusion_aware" / "metrics.json") + " --table " +
                         quote(out / "baseline" / "metrics.csv") + " --out-dir " + quote(out / "cmp")),
                     true);
  ASSERT_EQ(r.status, 0) << r.out;
  const json cmp = json::parse(escooter::read_file(out / "cmp" / "comparison.json"));
  const std::string series = escooter::read_file(out / "cmp" / "series_accuracy.csv");
  EXPECT_NE(series.find("0-9%"), std::string::npos);
  // Both columns identical on every row.
  std::istringstream lines(series);
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("bin", 0) == 0) continue;
    const auto a = line.find(','), b = line.rfind(',');
    EXPECT_EQ(line.substr(a + 1, b - a - 1), line.substr(b + 1)) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_NE(cmp.dump().find("\"overall_delta_pp\":0.0"), std::string::npos) << cmp.dump();
}

TEST_F(CliTest, EvaluateTwiceIsByteIdentical) {
  testutil::TempDir out;
  ASSERT_EQ(run(cli("run --manifest " + quote(manifest()) + " --classifier constant:0.7 --out " + quote(out / "r.json"))).status, 0);
  for (const char* d : {"a", "b"}) {
    ASSERT_EQ(run(cli("evaluate --manifest " + quote(manifest()) + " --run " + quote(out / "r.json") + " --out-dir " +
                      quote(out / d))).status,
              0);
  }
  for (const char* f : {"metrics.json", "metrics.csv", "instances.json"}) {
    EXPECT_EQ(escooter::read_file(out / "a" / f), escooter::read_file(out / "b" / f)) << f;
  }
  const std::string csv = escooter::read_file(out / "a" / "metrics.csv");
  EXPECT_NE(csv.find("toolkit_version"), std::string::npos);
  EXPECT_NE(csv.find("config_hash"), std::string::npos);
}

TEST_F(CliTest, ExecAdapterEndToEnd) {
  testutil::TempDir out;
  const std::string exec = "exec:" + std::string(ESCOOTER_PYTHON) + " " + ESCOOTER_STUB_ADAPTER;
  const auto r = run(cli("run --manifest " + quote(manifest()) + " --out " + quote(out / "r.json") + " --detector " +
                         quote(exec) + " --classifier " + quote(exec)),
                     true);
  ASSERT_EQ(r.status, 0) << r.out;
  const json doc = json::parse(escooter::read_file(out / "r.json"));
  EXPECT_EQ(doc["backends"]["detector"]["name"], "stub-adapter");
  EXPECT_TRUE(doc["failures"].empty());
}

}  // namespace
