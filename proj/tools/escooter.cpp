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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "escooter/commands.hpp"
#include "escooter/config.hpp"
#include "escooter/error.hpp"
#include "json.hpp"

namespace {

int report_error(std::string_view code, const std::string& message, int status) {
  nlohmann::json err{{"error", {{"code", code}, {"message", message}, {"exit_status", status}}}};
  std::cerr << err.dump() << std::endl;
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion benchmark toolkit for e-scooter rider detection"};
  app.set_version_flag("--version", ESCOOTER_VERSION);
  app.require_subcommand(0, 1);

  std::string config_file;
  std::vector<std::string> overrides;
  bool dump = false;
  app.add_option("--config", config_file, "JSON config file (default: $ESCOOTER_CONFIG)");
  app.add_option("--set", overrides, "Override a config value, e.g. pipeline.mode=baseline");
  app.add_flag("--dump-config", dump, "Print the resolved config before running");

  std::string manifest, out, report, plan, run_path, detector = "oracle", classifier = "oracle", label;
  std::vector<std::string> tables;
  bool allow_drift = false;
  bool binary_parts = false;

  auto* stats = app.add_subcommand("stats", "Per-bin and per-class instance counts");
  stats->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", out, "Also write the JSON here");

  auto* annotate = app.add_subcommand("annotate", "Recompute occlusion levels and report drift");
  annotate->add_option("--manifest", manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  annotate->add_option("--out", out, "Output manifest")->required();
  annotate->add_option("--report", report, "Discrepancy report (default: <out>_report.json)");
  std::string weights;
  annotate->add_option("--weights", weights, "Part weight table JSON")->check(CLI::ExistingFile);
  annotate->add_flag("--allow-drift", allow_drift, "Exit 0 even when levels drift");
  annotate->add_flag("--binary-parts", binary_parts, "Treat each part as fully visible or fully occluded");

  auto* synthesize = app.add_subcommand("synthesize", "Generate occluded instances to bin quotas");
  synthesize->add_option("--plan", plan, "Synthesis plan JSON")->required()->check(CLI::ExistingFile);
  synthesize->add_option("--out-dir", out, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Run detection + classification over a manifest");
  run->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Run record JSON")->required();
  run->add_option("--detector", detector, "oracle | file:PATH | exec:COMMAND")->capture_default_str();
  run->add_option("--classifier", classifier, "oracle | constant:SCORE | exec:COMMAND")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Score a run against the manifest");
  evaluate->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--run", run_path, "Run record JSON")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out-dir", out, "Directory for metrics.json/.csv and instances.json")->required();
  evaluate->add_option("--label", label, "Run label used in reports (default: pipeline mode)");

  auto* compare = app.add_subcommand("compare", "Compare metrics tables and emit plot series");
  compare->add_option("--table", tables, "metrics.json or metrics.csv; first is the reference")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--out-dir", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), 1);
  }

  try {
    if (binary_parts) overrides.push_back("annotation.part_mode=binary");
    if (!weights.empty()) overrides.push_back("annotation.weights=" + weights);
    const std::optional<std::filesystem::path> cfg_path =
        config_file.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_file);
    const escooter::ToolkitConfig cfg = escooter::resolve_config(cfg_path, overrides);
    if (dump) std::cout << escooter::dump_config(cfg);
    if (app.get_subcommands().empty()) {
      if (dump) return 0;
      return report_error("UsageError", "a subcommand is required (see --help)", 1);
    }

    if (*stats) {
      return escooter::cmd_stats(manifest, out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out),
                                 std::cout);
    }
    if (*annotate) {
      return escooter::cmd_annotate(manifest, out,
                                    report.empty() ? std::nullopt : std::optional<std::filesystem::path>(report),
                                    allow_drift, cfg, std::cout);
    }
    if (*synthesize) return escooter::cmd_synthesize(plan, out, cfg, std::cout);
    if (*run) return escooter::cmd_run(manifest, out, detector, classifier, cfg, std::cout);
    if (*evaluate) return escooter::cmd_evaluate(manifest, run_path, out, label, cfg, std::cout);
    if (*compare) {
      return escooter::cmd_compare(std::vector<std::filesystem::path>(tables.begin(), tables.end()), out,
                                   std::cout);
    }
  } catch (const escooter::Error& e) {
    return report_error(escooter::error_code_name(e.code()), e.detail(), escooter::exit_status_for(e.code()));
  } catch (const std::exception& e) {
    return report_error("Internal", e.what(), 3);
  }
  return 3;
}
