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

#include "escooter/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "escooter/error.hpp"

namespace escooter {

using nlohmann::json;

namespace {

constexpr std::string_view kCsvHeader = "bin,tp,tn,fp,fn,accuracy,tp_rate,fn_rate";

int attribute_bin(std::span<const EvalGt> gt, const BBox& box) {
  if (gt.empty()) return 0;
  const double cx = box.x + box.w / 2.0;
  const double cy = box.y + box.h / 2.0;
  std::size_t best = 0;
  double best_iou = -1.0;
  double best_dist = 0.0;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const double v = iou(box, gt[g].box);
    const double dx = gt[g].box.x + gt[g].box.w / 2.0 - cx;
    const double dy = gt[g].box.y + gt[g].box.h / 2.0 - cy;
    const double dist = dx * dx + dy * dy;
    if (v > best_iou || (v == best_iou && dist < best_dist)) {
      best = g;
      best_iou = v;
      best_dist = dist;
    }
  }
  return gt[best].bin;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json counts_json(const ConfusionCounts& c) {
  return json{{"tp", c.tp},
              {"tn", c.tn},
              {"fp", c.fp},
              {"fn", c.fn},
              {"accuracy", optional_number(accuracy_or_empty(c))},
              {"tp_rate", optional_number(tp_rate(c))},
              {"fn_rate", optional_number(fn_rate(c))}};
}

ConfusionCounts counts_from(const json& j) {
  ConfusionCounts c;
  c.tp = j.at("tp").get<std::int64_t>();
  c.tn = j.at("tn").get<std::int64_t>();
  c.fp = j.at("fp").get<std::int64_t>();
  c.fn = j.at("fn").get<std::int64_t>();
  if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0) {
    throw Error(ErrorCode::kMalformedDocument, "negative confusion count");
  }
  return c;
}

std::string display_or_empty(const std::optional<double>& v) {
  return v ? format_accuracy(*v) : std::string();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

std::vector<std::string> lines_of(std::string_view doc) {
  std::vector<std::string> out;
  std::istringstream in{std::string(doc)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::int64_t parse_count(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kMalformedDocument, "bad count '" + s + "'");
  }
  if (used != s.size() || v < 0) throw Error(ErrorCode::kMalformedDocument, "bad count '" + s + "'");
  return v;
}

std::string column_name(const BinMetricsTable& t, std::size_t i) {
  return t.run.label.empty() ? "run" + std::to_string(i) : t.run.label;
}

void metadata_lines(std::ostringstream& out, std::span<const BinMetricsTable> tables) {
  out << "# toolkit_version=" << ESCOOTER_VERSION << "\n";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& d = tables[i].run;
    const std::string c = column_name(tables[i], i);
    out << "# " << c << ".config_hash=" << d.config_hash << "\n";
    out << "# " << c << ".detector=" << to_json(d.detector).dump() << "\n";
    out << "# " << c << ".classifier=" << to_json(d.classifier).dump() << "\n";
  }
}

}  // namespace

MatchResult match_predictions(std::span<const EvalGt> gt, std::span<const EvalCandidate> candidates,
                              double iou_threshold) {
  MatchResult m;
  m.gt_to_candidate.assign(gt.size(), std::nullopt);
  m.candidate_to_gt.assign(candidates.size(), std::nullopt);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].score > candidates[b].score;
  });
  for (const std::size_t c : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (m.gt_to_candidate[g]) continue;
      const double v = iou(candidates[c].box, gt[g].box);
      if (v >= iou_threshold && v > best_iou) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      m.gt_to_candidate[best] = static_cast<int>(c);
      m.candidate_to_gt[c] = best;
    }
  }
  return m;
}

BinCounts confusion_from_matches(std::span<const EvalGt> gt, std::span<const EvalCandidate> candidates,
                                 const MatchResult& matches) {
  BinCounts bins{};
  for (const auto& g : gt) {
    if (g.bin < 0 || g.bin >= kNumBins) {
      throw Error(ErrorCode::kMissingBin, "ground-truth instance without a valid occlusion bin");
    }
  }
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const auto& m = matches.gt_to_candidate.at(g);
    const bool rider_verdict = m && candidates[*m].rider;
    ConfusionCounts& c = bins[gt[g].bin];
    if (gt[g].label == ClassLabel::kEscooterRider) {
      (rider_verdict ? c.tp : c.fn) += 1;
    } else {
      (rider_verdict ? c.fp : c.tn) += 1;
    }
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (matches.candidate_to_gt.at(i) || !candidates[i].rider) continue;
    bins[attribute_bin(gt, candidates[i].box)].fp += 1;
  }
  return bins;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() <= 0) throw Error(ErrorCode::kEmptyCounts, "accuracy of an empty confusion tuple");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::optional<double> accuracy_or_empty(const ConfusionCounts& c) {
  if (c.total() <= 0) return std::nullopt;
  return accuracy(c);
}

std::optional<double> tp_rate(const ConfusionCounts& c) {
  if (c.tp + c.fn <= 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

std::optional<double> fn_rate(const ConfusionCounts& c) {
  if (c.tp + c.fn <= 0) return std::nullopt;
  return static_cast<double>(c.fn) / static_cast<double>(c.tp + c.fn);
}

std::string format_fixed(double value, int decimals) {
  // Avoid printing "-0.00" for values that round to zero.
  if (std::fabs(value) < 0.5 * std::pow(10.0, -decimals)) value = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string bin_label(int bin) {
  if (bin < 0 || bin >= kNumBins) throw Error(ErrorCode::kMissingBin, "bin out of range");
  return std::to_string(bin * 10) + "-" + std::to_string(bin * 10 + 9) + "%";
}

ConfusionCounts BinMetricsTable::overall() const {
  ConfusionCounts sum;
  for (const auto& b : bins) sum += b;
  return sum;
}

Evaluation evaluate_run(const DatasetManifest& manifest, const PipelineRun& run, double iou_threshold,
                        std::string label) {
  if (run.manifest_hash != manifest_hash(manifest)) {
    throw Error(ErrorCode::kManifestMismatch, "run was produced from a different manifest");
  }
  std::map<std::string, std::vector<std::size_t>> by_image;
  for (std::size_t i = 0; i < manifest.instances.size(); ++i) {
    by_image[manifest.instances[i].image.path].push_back(i);
  }
  std::map<std::string, const ImageRecord*> records;
  for (const auto& rec : run.images) {
    if (by_image.count(rec.image_id) == 0) {
      throw Error(ErrorCode::kManifestMismatch, "run image '" + rec.image_id + "' is not in the manifest");
    }
    records[rec.image_id] = &rec;
  }

  struct ImageResult {
    BinCounts bins{};
    std::int64_t unmatched_fp = 0;
    std::vector<std::pair<std::size_t, InstanceOutcome>> outcomes;
  };
  std::vector<const std::pair<const std::string, std::vector<std::size_t>>*> images;
  for (const auto& entry : by_image) images.push_back(&entry);
  std::vector<ImageResult> results(images.size());
  std::vector<std::optional<Error>> errors(images.size());

  const std::int64_t n = static_cast<std::int64_t>(images.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      const auto& [image_id, members] = *images[k];
      std::vector<EvalGt> gt;
      for (const std::size_t i : members) {
        const auto& inst = manifest.instances[i];
        gt.push_back(EvalGt{inst.bbox, inst.label, inst.occlusion_bin});
      }
      std::vector<EvalCandidate> cands;
      std::vector<int> cand_index;
      const auto it = records.find(image_id);
      if (it != records.end() && !it->second->error_code) {
        for (const auto& c : it->second->candidates) {
          if (!c.passed_floor) continue;
          cands.push_back(EvalCandidate{c.bbox, c.score, c.rider});
          cand_index.push_back(c.index);
        }
      }
      const MatchResult m = match_predictions(gt, cands, iou_threshold);
      ImageResult& r = results[k];
      r.bins = confusion_from_matches(gt, cands, m);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        if (!m.candidate_to_gt[c] && cands[c].rider) ++r.unmatched_fp;
      }
      for (std::size_t g = 0; g < gt.size(); ++g) {
        const auto& inst = manifest.instances[members[g]];
        InstanceOutcome o;
        o.id = inst.id;
        o.image = image_id;
        o.label = inst.label;
        o.bin = inst.occlusion_bin;
        bool rider_verdict = false;
        if (const auto& mc = m.gt_to_candidate[g]) {
          o.candidate = cand_index[*mc];
          o.rider_verdict = cands[*mc].rider;
          rider_verdict = cands[*mc].rider;
        }
        if (inst.label == ClassLabel::kEscooterRider) {
          o.outcome = rider_verdict ? "TP" : "FN";
        } else {
          o.outcome = rider_verdict ? "FP" : "TN";
        }
        r.outcomes.emplace_back(members[g], std::move(o));
      }
    } catch (const Error& e) {
      errors[k] = e;
    }
  }
  for (const auto& e : errors) {
    if (e) throw *e;
  }

  Evaluation ev;
  ev.table.run.label = std::move(label);
  ev.table.run.toolkit_version = ESCOOTER_VERSION;
  ev.table.run.manifest_hash = run.manifest_hash;
  ev.table.run.config_hash = pipeline_config_hash(run.config);
  ev.table.run.mode = std::string(mode_name(run.config.mode));
  ev.table.run.detector = run.detector;
  ev.table.run.classifier = run.classifier;
  ev.table.run.iou_threshold = iou_threshold;
  ev.table.run.failed_images = static_cast<std::int64_t>(run.failures().size());
  std::vector<std::optional<InstanceOutcome>> ordered(manifest.instances.size());
  for (auto& r : results) {
    for (int b = 0; b < kNumBins; ++b) ev.table.bins[b] += r.bins[b];
    ev.unmatched_fp += r.unmatched_fp;
    for (auto& [idx, o] : r.outcomes) ordered[idx] = std::move(o);
  }
  for (auto& o : ordered) ev.instances.push_back(std::move(*o));
  return ev;
}

Comparison compare_runs(const BinMetricsTable& a, const BinMetricsTable& b) {
  if (a.run.manifest_hash != b.run.manifest_hash) {
    throw Error(ErrorCode::kManifestMismatch, "compared runs use different manifests");
  }
  Comparison cmp;
  cmp.a = a.run;
  cmp.b = b.run;
  cmp.accuracy_a = accuracy(a.overall());
  cmp.accuracy_b = accuracy(b.overall());
  cmp.overall_delta_pp = 100.0 * (cmp.accuracy_a - cmp.accuracy_b);
  const auto diff = [](std::optional<double> x, std::optional<double> y) -> std::optional<double> {
    if (!x || !y) return std::nullopt;
    return 100.0 * (*x - *y);
  };
  for (int bin = 0; bin < kNumBins; ++bin) {
    const auto& ca = a.bins[bin];
    const auto& cb = b.bins[bin];
    BinDelta& d = cmp.bins[bin];
    d.accuracy_pp = diff(accuracy_or_empty(ca), accuracy_or_empty(cb));
    d.tp_rate_pp = diff(tp_rate(ca), tp_rate(cb));
    d.fn_rate_pp = diff(fn_rate(ca), fn_rate(cb));
    d.fp_delta = ca.fp - cb.fp;
    const auto acc_a = accuracy_or_empty(ca);
    const auto acc_b = accuracy_or_empty(cb);
    d.a_exceeds_b = acc_a && acc_b && *acc_a > *acc_b;
    if (!d.a_exceeds_b) cmp.non_dominant_bins.push_back(bin);
  }
  return cmp;
}

std::vector<FpCounts> fp_count_by_run(std::span<const BinMetricsTable> runs) {
  std::vector<FpCounts> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    FpCounts f;
    f.label = column_name(runs[i], i);
    for (int b = 0; b < kNumBins; ++b) {
      f.per_bin[b] = runs[i].bins[b].fp;
      f.total += f.per_bin[b];
    }
    out.push_back(std::move(f));
  }
  return out;
}

json to_json(const RunDescriptor& d) {
  return json{{"label", d.label},
              {"toolkit_version", d.toolkit_version},
              {"manifest_hash", d.manifest_hash},
              {"config_hash", d.config_hash},
              {"mode", d.mode},
              {"detector", to_json(d.detector)},
              {"classifier", to_json(d.classifier)},
              {"iou_threshold", d.iou_threshold},
              {"failed_images", d.failed_images}};
}

RunDescriptor run_descriptor_from_json(const json& j) {
  RunDescriptor d;
  d.label = j.value("label", std::string());
  d.toolkit_version = j.at("toolkit_version").get<std::string>();
  d.manifest_hash = j.at("manifest_hash").get<std::string>();
  d.config_hash = j.at("config_hash").get<std::string>();
  d.mode = j.at("mode").get<std::string>();
  d.detector = descriptor_from_json(j.at("detector"));
  d.classifier = descriptor_from_json(j.at("classifier"));
  d.iou_threshold = j.at("iou_threshold").get<double>();
  d.failed_images = j.value("failed_images", std::int64_t{0});
  return d;
}

std::string table_to_json(const BinMetricsTable& t) {
  json doc;
  doc["toolkit_version"] = ESCOOTER_VERSION;
  doc["run"] = to_json(t.run);
  doc["rules"] = {{"tn", kTnRule}, {"fp", kFpRule}};
  json bins = json::array();
  for (int b = 0; b < kNumBins; ++b) {
    json row = counts_json(t.bins[b]);
    row["bin"] = b;
    row["label"] = bin_label(b);
    bins.push_back(std::move(row));
  }
  doc["bins"] = std::move(bins);
  doc["overall"] = counts_json(t.overall());
  return doc.dump(1) + "\n";
}

BinMetricsTable table_from_json(std::string_view document) {
  BinMetricsTable t;
  try {
    const json doc = json::parse(document);
    t.run = run_descriptor_from_json(doc.at("run"));
    const json& bins = doc.at("bins");
    if (!bins.is_array() || bins.size() != kNumBins) {
      throw Error(ErrorCode::kMalformedDocument, "metrics table needs exactly 10 bin rows");
    }
    for (const auto& row : bins) {
      const int b = row.at("bin").get<int>();
      if (b < 0 || b >= kNumBins) throw Error(ErrorCode::kMissingBin, "bin row out of range");
      t.bins[b] = counts_from(row);
    }
    if (doc.contains("overall") && counts_from(doc.at("overall")) != t.overall()) {
      throw Error(ErrorCode::kMalformedDocument, "overall row is not the sum of the bin rows");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("metrics table: ") + e.what());
  }
  return t;
}

std::string table_to_csv(const BinMetricsTable& t) {
  std::ostringstream out;
  const auto& d = t.run;
  out << "# toolkit_version=" << ESCOOTER_VERSION << "\n";
  out << "# label=" << d.label << "\n";
  out << "# manifest_hash=" << d.manifest_hash << "\n";
  out << "# config_hash=" << d.config_hash << "\n";
  out << "# mode=" << d.mode << "\n";
  out << "# detector=" << to_json(d.detector).dump() << "\n";
  out << "# classifier=" << to_json(d.classifier).dump() << "\n";
  out << "# iou_threshold=" << json(d.iou_threshold).dump() << "\n";
  out << "# failed_images=" << d.failed_images << "\n";
  out << "# run_toolkit_version=" << d.toolkit_version << "\n";
  out << "# tn_rule=" << kTnRule << "\n";
  out << "# fp_rule=" << kFpRule << "\n";
  out << kCsvHeader << "\n";
  const auto row = [&](const std::string& name, const ConfusionCounts& c) {
    out << name << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << ','
        << display_or_empty(accuracy_or_empty(c)) << ',' << display_or_empty(tp_rate(c)) << ','
        << display_or_empty(fn_rate(c)) << "\n";
  };
  for (int b = 0; b < kNumBins; ++b) row(std::to_string(b), t.bins[b]);
  row("overall", t.overall());
  return out.str();
}

BinMetricsTable table_from_csv(std::string_view document) {
  BinMetricsTable t;
  std::map<std::string, std::string> meta;
  bool header = false;
  std::array<bool, kNumBins> seen{};
  std::optional<ConfusionCounts> overall;
  try {
    for (const auto& line : lines_of(document)) {
      if (line[0] == '#') {
        const std::string body = line.substr(line.find_first_not_of("# "));
        const auto eq = body.find('=');
        if (eq != std::string::npos) meta[body.substr(0, eq)] = body.substr(eq + 1);
        continue;
      }
      if (!header) {
        if (line != kCsvHeader) throw Error(ErrorCode::kMalformedDocument, "unexpected CSV header");
        header = true;
        continue;
      }
      const auto f = split_csv_line(line);
      if (f.size() != 8) throw Error(ErrorCode::kMalformedDocument, "CSV row needs 8 fields");
      const ConfusionCounts c{parse_count(f[1]), parse_count(f[2]), parse_count(f[3]), parse_count(f[4])};
      if (f[0] == "overall") {
        overall = c;
        continue;
      }
      const auto b = parse_count(f[0]);
      if (b >= kNumBins || seen[b]) throw Error(ErrorCode::kMissingBin, "bad bin row " + f[0]);
      seen[b] = true;
      t.bins[b] = c;
    }
    for (int b = 0; b < kNumBins; ++b) {
      if (!seen[b]) throw Error(ErrorCode::kMissingBin, "missing row for bin " + std::to_string(b));
    }
    if (overall && *overall != t.overall()) {
      throw Error(ErrorCode::kMalformedDocument, "overall row is not the sum of the bin rows");
    }
    t.run.label = meta["label"];
    t.run.toolkit_version = meta.count("run_toolkit_version") ? meta["run_toolkit_version"] : meta["toolkit_version"];
    t.run.manifest_hash = meta["manifest_hash"];
    t.run.config_hash = meta["config_hash"];
    t.run.mode = meta["mode"];
    if (meta.count("detector")) t.run.detector = descriptor_from_json(json::parse(meta["detector"]));
    if (meta.count("classifier")) t.run.classifier = descriptor_from_json(json::parse(meta["classifier"]));
    if (meta.count("iou_threshold")) t.run.iou_threshold = json::parse(meta["iou_threshold"]).get<double>();
    if (meta.count("failed_images")) t.run.failed_images = parse_count(meta["failed_images"]);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("metrics CSV: ") + e.what());
  }
  return t;
}

BinMetricsTable load_table(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (path.extension() == ".csv") return table_from_csv(bytes);
  return table_from_json(bytes);
}

std::string instances_to_json(const Evaluation& e) {
  json doc;
  doc["toolkit_version"] = ESCOOTER_VERSION;
  doc["run"] = to_json(e.table.run);
  doc["unmatched_fp"] = e.unmatched_fp;
  json items = json::array();
  for (const auto& o : e.instances) {
    json j{{"id", o.id},
           {"image", o.image},
           {"label", label_name(o.label)},
           {"bin", o.bin},
           {"outcome", o.outcome}};
    j["candidate"] = o.candidate ? json(*o.candidate) : json(nullptr);
    j["rider_verdict"] = o.rider_verdict ? json(*o.rider_verdict) : json(nullptr);
    items.push_back(std::move(j));
  }
  doc["instances"] = std::move(items);
  return doc.dump(1) + "\n";
}

std::string comparison_to_json(std::span<const BinMetricsTable> tables) {
  if (tables.size() < 2) throw Error(ErrorCode::kInvalidConfig, "comparison needs at least two tables");
  json doc;
  doc["toolkit_version"] = ESCOOTER_VERSION;
  doc["rules"] = {{"tn", kTnRule}, {"fp", kFpRule}};
  json runs = json::array();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    json r = to_json(tables[i].run);
    r["column"] = column_name(tables[i], i);
    const double acc = accuracy(tables[i].overall());
    r["accuracy"] = acc;
    r["accuracy_display"] = format_accuracy(acc);
    runs.push_back(std::move(r));
  }
  doc["runs"] = std::move(runs);
  json comparisons = json::array();
  for (std::size_t i = 1; i < tables.size(); ++i) {
    const Comparison c = compare_runs(tables[0], tables[i]);
    json bins = json::array();
    for (int b = 0; b < kNumBins; ++b) {
      const BinDelta& d = c.bins[b];
      bins.push_back({{"bin", b},
                      {"label", bin_label(b)},
                      {"accuracy_pp", optional_number(d.accuracy_pp)},
                      {"tp_rate_pp", optional_number(d.tp_rate_pp)},
                      {"fn_rate_pp", optional_number(d.fn_rate_pp)},
                      {"fp_delta", d.fp_delta},
                      {"a_exceeds_b", d.a_exceeds_b}});
    }
    comparisons.push_back({{"a", column_name(tables[0], 0)},
                           {"b", column_name(tables[i], i)},
                           {"overall_delta_pp", c.overall_delta_pp},
                           {"overall_delta_display", format_pp(c.overall_delta_pp)},
                           {"bins", std::move(bins)},
                           {"non_dominant_bins", c.non_dominant_bins}});
  }
  doc["comparisons"] = std::move(comparisons);
  json fps = json::array();
  for (const auto& f : fp_count_by_run(tables)) {
    fps.push_back({{"run", f.label}, {"total", f.total}, {"per_bin", f.per_bin}});
  }
  doc["fp_counts"] = std::move(fps);
  return doc.dump(1) + "\n";
}

std::string series_csv(std::span<const BinMetricsTable> tables, std::string_view metric) {
  if (metric != "accuracy" && metric != "tp_rate" && metric != "fn_rate" && metric != "fp") {
    throw Error(ErrorCode::kInvalidConfig, "unknown series metric '" + std::string(metric) + "'");
  }
  std::ostringstream out;
  metadata_lines(out, tables);
  out << "# metric=" << metric << "\n";
  out << "bin";
  for (std::size_t i = 0; i < tables.size(); ++i) out << ',' << csv_field(column_name(tables[i], i));
  out << "\n";
  for (int b = 0; b < kNumBins; ++b) {
    out << bin_label(b);
    for (const auto& t : tables) {
      const ConfusionCounts& c = t.bins[b];
      out << ',';
      if (metric == "fp") {
        out << c.fp;
      } else if (metric == "accuracy") {
        out << display_or_empty(accuracy_or_empty(c));
      } else if (metric == "tp_rate") {
        out << display_or_empty(tp_rate(c));
      } else {
        out << display_or_empty(fn_rate(c));
      }
    }
    out << "\n";
  }
  return out.str();
}

std::string fp_counts_csv(std::span<const BinMetricsTable> tables) {
  std::ostringstream out;
  metadata_lines(out, tables);
  out << "run,total";
  for (int b = 0; b < kNumBins; ++b) out << ',' << bin_label(b);
  out << "\n";
  for (const auto& f : fp_count_by_run(tables)) {
    out << csv_field(f.label) << ',' << f.total;
    for (const auto v : f.per_bin) out << ',' << v;
    out << "\n";
  }
  return out.str();
}

std::vector<FpCounts> fp_counts_from_csv(std::string_view document) {
  std::vector<FpCounts> out;
  bool header = false;
  for (const auto& line : lines_of(document)) {
    if (line[0] == '#') continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2 + kNumBins) throw Error(ErrorCode::kMalformedDocument, "FP CSV row needs 12 fields");
    if (!header) {
      if (f[0] != "run" || f[1] != "total") throw Error(ErrorCode::kMalformedDocument, "unexpected FP CSV header");
      header = true;
      continue;
    }
    FpCounts c;
    c.label = f[0];
    c.total = parse_count(f[1]);
    std::int64_t sum = 0;
    for (int b = 0; b < kNumBins; ++b) {
      c.per_bin[b] = parse_count(f[2 + b]);
      sum += c.per_bin[b];
    }
    if (sum != c.total) throw Error(ErrorCode::kMalformedDocument, "FP total differs from the bin sum");
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace escooter
