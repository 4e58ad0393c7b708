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

#include "escooter/commands.hpp"

#include <cmath>
#include <map>

#include "escooter/error.hpp"
#include "escooter/evaluation.hpp"
#include "escooter/pipeline.hpp"

namespace escooter {

using nlohmann::json;

namespace {

std::filesystem::path parent_or_cwd(const std::filesystem::path& p) {
  const auto parent = p.parent_path();
  return parent.empty() ? std::filesystem::path(".") : parent;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_relative() ? base / path : path;
}

json parse_json(std::string_view bytes, const std::string& what) {
  const json doc = json::parse(bytes, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kMalformedDocument, what + " is not valid JSON");
  return doc;
}

std::string spec_payload(const std::string& spec, std::string_view prefix) {
  return spec.substr(prefix.size());
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

std::shared_ptr<AdapterProcess> adapter_for(const std::string& command,
                                            std::shared_ptr<AdapterProcess>* shared) {
  if (shared && *shared) return *shared;
  auto process = std::make_shared<AdapterProcess>(command);
  if (shared) *shared = process;
  return process;
}

}  // namespace

AnnotationReport annotate_manifest(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                                   const PartWeightTable& weights, PartMode mode, double tolerance_pp) {
  weights.validate();
  AnnotationReport report;
  report.manifest = manifest;
  for (auto& inst : report.manifest.instances) {
    AnnotationRow row;
    row.id = inst.id;
    row.stored_pct = inst.occlusion_pct;
    if (inst.manual_override) {
      row.status = "manual_override";
      ++report.skipped;
      report.rows.push_back(std::move(row));
      continue;
    }
    std::vector<PartVisibility> parts;
    if (inst.part_map_path) {
      parts = part_visibility_from_part_map(read_png_gray(resolve(base_dir, *inst.part_map_path)), mode);
    } else if (!inst.keypoints.empty()) {
      std::optional<GrayImage> mask;
      if (inst.mask_path) mask = read_png_gray(resolve(base_dir, *inst.mask_path));
      parts = infer_part_visibility(inst.keypoints, coco17_skeleton(), mask ? &*mask : nullptr, mode);
    } else {
      row.status = "no_visibility_inputs";
      ++report.skipped;
      report.rows.push_back(std::move(row));
      continue;
    }
    const double pct = occlusion_level(parts, weights);
    row.recomputed_pct = pct;
    row.gap_pp = std::fabs(pct - inst.occlusion_pct);
    if (!(pct < 100.0)) {
      row.status = "out_of_range";
      ++report.flagged;
    } else {
      row.status = *row.gap_pp > tolerance_pp ? "drift" : "ok";
      if (row.status == "drift") ++report.flagged;
      inst.occlusion_pct = pct;
      inst.occlusion_bin = bin_of(pct);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string annotation_report_json(const AnnotationReport& report, const ToolkitConfig& cfg) {
  json doc;
  doc["toolkit_version"] = ESCOOTER_VERSION;
  doc["config_hash"] = config_hash(cfg);
  doc["manifest_hash"] = manifest_hash(report.manifest);
  doc["tolerance_pp"] = cfg.drift_tolerance_pp;
  doc["flagged"] = report.flagged;
  doc["skipped"] = report.skipped;
  json rows = json::array();
  for (const auto& r : report.rows) {
    json j{{"id", r.id}, {"stored_pct", r.stored_pct}, {"status", r.status}};
    j["recomputed_pct"] = r.recomputed_pct ? json(*r.recomputed_pct) : json(nullptr);
    j["gap_pp"] = r.gap_pp ? json(*r.gap_pp) : json(nullptr);
    rows.push_back(std::move(j));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(1) + "\n";
}

std::vector<BaseInstance> builtin_bases() {
  std::vector<BaseInstance> out;
  for (const int unit : {4, 8}) {
    for (const ClassLabel label : {ClassLabel::kEscooterRider, ClassLabel::kOtherVru}) {
      UniformFigureSpec spec;
      spec.unit = unit;
      spec.label = label;
      out.push_back(make_uniform_figure(
          std::string(label == ClassLabel::kEscooterRider ? "rider" : "pedestrian") + "_u" + std::to_string(unit),
          spec));
    }
  }
  return out;
}

std::vector<OccluderAsset> builtin_occluders() {
  std::vector<OccluderAsset> out;
  out.push_back(make_box_occluder("vehicle_panel", 64, 112, Rgba{150, 30, 30, 255}, OccluderCategory::kVehicle));
  out.push_back(make_ellipse_occluder("bush", 80, 120, Rgba{40, 110, 40, 255}, OccluderCategory::kOther));
  out.push_back(
      make_box_occluder("barrier", 96, 48, Rgba{200, 200, 60, 255}, OccluderCategory::kStreetFurniture));
  return out;
}

PlanFile parse_plan(std::string_view document, const std::filesystem::path& base_dir, const ToolkitConfig& cfg) {
  const json doc = parse_json(document, "synthesis plan");
  PlanFile pf;
  SynthesisPlan& plan = pf.plan;
  plan.policy = cfg.policy;
  plan.max_attempts = cfg.max_attempts;
  plan.min_scale = cfg.min_scale;
  plan.max_scale = cfg.max_scale;
  try {
    const json& q = doc.at("quotas");
    if (!q.is_array() || q.size() != kNumBins) {
      throw Error(ErrorCode::kInvalidConfig, "plan quotas must list 10 bins");
    }
    for (int b = 0; b < kNumBins; ++b) plan.quotas[b] = q[b].get<int>();
    plan.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("policy")) plan.policy = parse_policy(doc["policy"].get<std::string>());
    plan.max_attempts = doc.value("max_attempts", plan.max_attempts);
    plan.min_scale = doc.value("min_scale", plan.min_scale);
    plan.max_scale = doc.value("max_scale", plan.max_scale);

    if (doc.contains("bases")) {
      for (const auto& b : doc["bases"]) {
        UniformFigureSpec spec;
        spec.unit = b.value("unit", 4);
        spec.label = parse_label(b.at("label").get<std::string>());
        pf.bases.push_back(make_uniform_figure(b.at("id").get<std::string>(), spec));
      }
    } else {
      pf.bases = builtin_bases();
    }
    if (doc.contains("occluders")) {
      for (const auto& o : doc["occluders"]) {
        const std::string id = o.at("id").get<std::string>();
        const OccluderCategory cat = parse_category(o.value("category", std::string("other")));
        if (o.contains("image")) {
          std::optional<std::filesystem::path> mask;
          if (o.contains("mask")) mask = resolve(base_dir, o["mask"].get<std::string>());
          pf.occluders.push_back(load_occluder(id, resolve(base_dir, o["image"].get<std::string>()),
                                               mask ? &*mask : nullptr, cat));
        } else {
          const std::string shape = o.at("shape").get<std::string>();
          const int w = o.at("width").get<int>();
          const int h = o.at("height").get<int>();
          const Rgba color{90, 90, 90, 255};
          if (shape == "box") {
            pf.occluders.push_back(make_box_occluder(id, w, h, color, cat));
          } else if (shape == "ellipse") {
            pf.occluders.push_back(make_ellipse_occluder(id, w, h, color, cat));
          } else {
            throw Error(ErrorCode::kInvalidConfig, "unknown occluder shape '" + shape + "'");
          }
        }
      }
    } else {
      pf.occluders = builtin_occluders();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("synthesis plan: ") + e.what());
  }
  if (plan.max_attempts <= 0 || !(plan.min_scale > 0.0 && plan.min_scale <= plan.max_scale)) {
    throw Error(ErrorCode::kInvalidConfig, "synthesis plan has invalid search bounds");
  }
  return pf;
}

std::unique_ptr<DetectorBackend> make_detector(const std::string& spec, const DatasetManifest& manifest,
                                               std::shared_ptr<AdapterProcess>* shared) {
  if (spec == "oracle") return std::make_unique<OracleDetector>(manifest);
  if (starts_with(spec, "file:")) {
    return std::make_unique<PrecomputedDetector>(PrecomputedDetector::from_file(spec_payload(spec, "file:")));
  }
  if (starts_with(spec, "exec:")) {
    return std::make_unique<ExternalDetector>(adapter_for(spec_payload(spec, "exec:"), shared));
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown detector '" + spec + "' (oracle, file:PATH, exec:CMD)");
}

std::unique_ptr<ClassifierBackend> make_classifier(const std::string& spec, const DatasetManifest& manifest,
                                                   std::shared_ptr<AdapterProcess>* shared) {
  if (spec == "oracle") return std::make_unique<OracleClassifier>(manifest);
  if (starts_with(spec, "constant:")) {
    const std::string v = spec_payload(spec, "constant:");
    std::size_t used = 0;
    double score = 0.0;
    try {
      score = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw Error(ErrorCode::kInvalidConfig, "bad constant score '" + v + "'");
    return std::make_unique<ConstantClassifier>(score);
  }
  if (starts_with(spec, "exec:")) {
    return std::make_unique<ExternalClassifier>(adapter_for(spec_payload(spec, "exec:"), shared));
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown classifier '" + spec + "' (oracle, constant:S, exec:CMD)");
}

int cmd_stats(const std::filesystem::path& manifest_path, const std::optional<std::filesystem::path>& out,
              std::ostream& stdout_stream) {
  const DatasetManifest m = load_manifest(manifest_path);
  const ManifestStats s = manifest_stats(m);
  json doc;
  doc["toolkit_version"] = ESCOOTER_VERSION;
  doc["manifest_hash"] = manifest_hash(m);
  doc["total"] = s.total();
  doc["classes"] = {{std::string(label_name(ClassLabel::kEscooterRider)), s.class_total(ClassLabel::kEscooterRider)},
                    {std::string(label_name(ClassLabel::kOtherVru)), s.class_total(ClassLabel::kOtherVru)}};
  json bins = json::array();
  for (int b = 0; b < kNumBins; ++b) {
    bins.push_back({{"bin", b},
                    {"label", bin_label(b)},
                    {"escooter_rider", s.counts[b][0]},
                    {"other_vru", s.counts[b][1]},
                    {"total", s.bin_total(b)}});
  }
  doc["bins"] = std::move(bins);
  const std::string text = doc.dump(1) + "\n";
  if (out) write_file(*out, text);
  stdout_stream << text;
  return 0;
}

int cmd_annotate(const std::filesystem::path& manifest_path, const std::filesystem::path& out,
                 const std::optional<std::filesystem::path>& report_path, bool allow_drift,
                 const ToolkitConfig& cfg, std::ostream& stdout_stream) {
  const DatasetManifest m = load_manifest(manifest_path);
  const AnnotationReport report =
      annotate_manifest(m, parent_or_cwd(manifest_path), weights_for(cfg), cfg.part_mode, cfg.drift_tolerance_pp);
  save_manifest(out, report.manifest);
  std::filesystem::path rp = report_path ? *report_path : out;
  if (!report_path) rp.replace_filename(out.stem().string() + "_report.json");
  write_file(rp, annotation_report_json(report, cfg));
  stdout_stream << "annotated " << report.rows.size() << " instances: " << report.flagged << " flagged, "
                << report.skipped << " skipped\n";
  for (const auto& r : report.rows) {
    if (r.status == "drift" || r.status == "out_of_range") {
      stdout_stream << "  " << r.status << " " << r.id << ": stored " << format_pp(r.stored_pct) << " recomputed "
                    << format_pp(*r.recomputed_pct) << "\n";
    }
  }
  if (report.flagged > 0 && !allow_drift) {
    throw Error(ErrorCode::kBinMismatch,
                std::to_string(report.flagged) + " instance(s) drift from their stored occlusion level");
  }
  return 0;
}

int cmd_synthesize(const std::filesystem::path& plan_path, const std::filesystem::path& out_dir,
                   const ToolkitConfig& cfg, std::ostream& stdout_stream) {
  const std::string plan_bytes = read_file(plan_path);
  const PlanFile pf = parse_plan(plan_bytes, parent_or_cwd(plan_path), cfg);
  SynthesisOutput out = synthesize_dataset(pf.bases, pf.occluders, pf.plan, weights_for(cfg));
  out.manifest.metadata["config_hash"] = config_hash(cfg);
  out.manifest.metadata["plan_hash"] = hex64(fnv1a64(plan_bytes));
  write_synthesis(out_dir, out);
  stdout_stream << "synthesized " << out.manifest.instances.size() << " instances into " << out_dir.string()
                << "\n";
  return 0;
}

int cmd_run(const std::filesystem::path& manifest_path, const std::filesystem::path& out,
            const std::string& detector, const std::string& classifier, const ToolkitConfig& cfg,
            std::ostream& stdout_stream) {
  const DatasetManifest m = load_manifest(manifest_path);
  std::shared_ptr<AdapterProcess> shared;
  const bool same_exec = starts_with(detector, "exec:") && detector == classifier;
  auto det = make_detector(detector, m, same_exec ? &shared : nullptr);
  auto cls = make_classifier(classifier, m, same_exec ? &shared : nullptr);
  const PipelineRun run = run_dataset(m, parent_or_cwd(manifest_path), cfg.pipeline, *det, *cls);
  write_file(out, serialize_run(run));
  const auto failures = run.failures();
  stdout_stream << "ran " << run.images.size() << " images, " << failures.size() << " failed\n";
  if (!run.images.empty() && failures.size() == run.images.size()) {
    throw Error(ErrorCode::kBackendFailure, "every image failed; first: " + *failures.front()->error_message);
  }
  return 0;
}

int cmd_evaluate(const std::filesystem::path& manifest_path, const std::filesystem::path& run_path,
                 const std::filesystem::path& out_dir, const std::string& label, const ToolkitConfig& cfg,
                 std::ostream& stdout_stream) {
  const DatasetManifest m = load_manifest(manifest_path);
  const PipelineRun run = parse_run(read_file(run_path));
  const Evaluation ev = evaluate_run(m, run, cfg.iou_threshold, label.empty() ? std::string(mode_name(run.config.mode)) : label);
  write_file(out_dir / "metrics.json", table_to_json(ev.table));
  write_file(out_dir / "metrics.csv", table_to_csv(ev.table));
  write_file(out_dir / "instances.json", instances_to_json(ev));
  const ConfusionCounts all = ev.table.overall();
  stdout_stream << "accuracy " << (all.total() > 0 ? format_accuracy(accuracy(all)) : std::string("n/a"))
                << " (tp " << all.tp << ", tn " << all.tn << ", fp " << all.fp << ", fn " << all.fn << ")\n";
  return 0;
}

int cmd_compare(const std::vector<std::filesystem::path>& table_paths, const std::filesystem::path& out_dir,
                std::ostream& stdout_stream) {
  if (table_paths.size() < 2) throw Error(ErrorCode::kInvalidConfig, "compare needs at least two tables");
  std::vector<BinMetricsTable> tables;
  for (const auto& p : table_paths) tables.push_back(load_table(p));
  write_file(out_dir / "comparison.json", comparison_to_json(tables));
  for (const char* metric : {"accuracy", "tp_rate", "fn_rate", "fp"}) {
    write_file(out_dir / (std::string("series_") + metric + ".csv"), series_csv(tables, metric));
  }
  write_file(out_dir / "fp_counts.csv", fp_counts_csv(tables));
  for (std::size_t i = 1; i < tables.size(); ++i) {
    const Comparison c = compare_runs(tables[0], tables[i]);
    stdout_stream << (c.a.label.empty() ? "run0" : c.a.label) << " vs "
                  << (c.b.label.empty() ? "run" + std::to_string(i) : c.b.label) << ": "
                  << format_accuracy(c.accuracy_a) << " vs " << format_accuracy(c.accuracy_b) << ", delta "
                  << format_pp(c.overall_delta_pp) << " pp\n";
  }
  return 0;
}

}  // namespace escooter
