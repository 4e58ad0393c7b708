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

#include "escooter/domain.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "escooter/annotation.hpp"
#include "escooter/error.hpp"
#include "escooter/geometry.hpp"
#include "json.hpp"

namespace escooter {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedDocument, what);
}

const json& require(const json& obj, const char* key, const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end()) malformed(ctx + ": missing field '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_string()) malformed(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number()) malformed(ctx + ": field '" + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) malformed(ctx + ": field '" + key + "' must be finite");
  return d;
}

int require_int(const json& obj, const char* key, const std::string& ctx) {
  const json& v = require(obj, key, ctx);
  if (!v.is_number_integer()) malformed(ctx + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           const std::string& ctx) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(ctx + ": field '" + key + "' must be a string");
  return it->get<std::string>();
}

SynthesisRecord parse_synthesis(const json& j, const std::string& ctx) {
  if (!j.is_object()) malformed(ctx + ": synthesis must be an object");
  SynthesisRecord r;
  r.base_id = require_string(j, "base_id", ctx);
  r.occluder_id = require_string(j, "occluder_id", ctx);
  const json& p = require(j, "placement", ctx);
  if (!p.is_object()) malformed(ctx + ": placement must be an object");
  r.placement = Placement{require_number(p, "x", ctx), require_number(p, "y", ctx),
                          require_number(p, "scale", ctx)};
  if (!(r.placement.scale > 0.0)) malformed(ctx + ": placement scale must be > 0");
  const json& seed = require(j, "seed", ctx);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    malformed(ctx + ": seed must be a non-negative integer");
  }
  r.seed = seed.get<std::uint64_t>();
  r.target_bin = require_int(j, "target_bin", ctx);
  if (r.target_bin < 0 || r.target_bin >= kNumBins) malformed(ctx + ": target_bin out of range");
  return r;
}

GroundTruthInstance parse_instance(const json& j, std::size_t index) {
  std::string ctx = "instances[" + std::to_string(index) + "]";
  if (!j.is_object()) malformed(ctx + ": expected an object");
  GroundTruthInstance inst;
  inst.id = require_string(j, "id", ctx);
  if (inst.id.empty()) malformed(ctx + ": empty id");
  ctx += " (" + inst.id + ")";

  const json& image = require(j, "image", ctx);
  if (!image.is_object()) malformed(ctx + ": image must be an object");
  inst.image.path = require_string(image, "path", ctx);
  inst.image.width = require_int(image, "width", ctx);
  inst.image.height = require_int(image, "height", ctx);
  if (inst.image.path.empty() || inst.image.width <= 0 || inst.image.height <= 0) {
    malformed(ctx + ": image must declare a path and positive dimensions");
  }

  const json& bbox = require(j, "bbox", ctx);
  if (!bbox.is_array() || bbox.size() != 4) malformed(ctx + ": bbox must be [x, y, w, h]");
  for (const auto& v : bbox) {
    if (!v.is_number()) malformed(ctx + ": bbox entries must be numbers");
  }
  inst.bbox = BBox{bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
                   bbox[3].get<double>()};
  if (!is_valid(inst.bbox)) malformed(ctx + ": bbox needs finite values and w, h > 0");
  try {
    clip_to_image(inst.bbox, inst.image.width, inst.image.height);
  } catch (const Error&) {
    malformed(ctx + ": bbox lies outside the image");
  }

  try {
    inst.label = parse_label(require_string(j, "label", ctx));
  } catch (const Error& e) {
    malformed(ctx + ": " + e.what());
  }

  if (const auto it = j.find("keypoints"); it != j.end()) {
    if (!it->is_array()) malformed(ctx + ": keypoints must be an array");
    for (const auto& kp : *it) {
      if (!kp.is_array() || kp.size() != 3 || !kp[0].is_number() || !kp[1].is_number() ||
          !kp[2].is_number_integer()) {
        malformed(ctx + ": keypoint must be [x, y, v]");
      }
      const int v = kp[2].get<int>();
      if (v < 0 || v > 2) malformed(ctx + ": keypoint visibility must be 0, 1 or 2");
      Keypoint k{kp[0].get<double>(), kp[1].get<double>(), static_cast<Visibility>(v)};
      if (!std::isfinite(k.x) || !std::isfinite(k.y)) malformed(ctx + ": keypoint not finite");
      if (k.v != Visibility::kNotLabeled &&
          (k.x < 0.0 || k.y < 0.0 || k.x > inst.image.width || k.y > inst.image.height)) {
        malformed(ctx + ": labeled keypoint outside the image");
      }
      inst.keypoints.push_back(k);
    }
  }

  inst.mask_path = optional_string(j, "mask_path", ctx);
  inst.part_map_path = optional_string(j, "part_map_path", ctx);

  const double pct = require_number(j, "occlusion_pct", ctx);
  if (!(pct >= 0.0 && pct < 100.0)) {
    throw Error(ErrorCode::kOutOfRangeOcclusion,
                ctx + ": occlusion_pct " + std::to_string(pct) + " outside [0, 100)");
  }
  inst.occlusion_pct = pct;
  inst.occlusion_bin = require_int(j, "occlusion_bin", ctx);
  if (inst.occlusion_bin != bin_of(pct)) {
    throw Error(ErrorCode::kBinMismatch, ctx + ": stored bin " +
                                             std::to_string(inst.occlusion_bin) +
                                             " but occlusion_pct gives " +
                                             std::to_string(bin_of(pct)));
  }

  if (const auto it = j.find("manual_override"); it != j.end()) {
    if (!it->is_boolean()) malformed(ctx + ": manual_override must be a boolean");
    inst.manual_override = it->get<bool>();
  }
  inst.provenance = optional_string(j, "provenance", ctx).value_or("");
  if (const auto it = j.find("synthesis"); it != j.end() && !it->is_null()) {
    inst.synthesis = parse_synthesis(*it, ctx);
  }
  return inst;
}

json instance_to_json(const GroundTruthInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["image"] = {{"path", inst.image.path}, {"width", inst.image.width},
                {"height", inst.image.height}};
  j["bbox"] = {inst.bbox.x, inst.bbox.y, inst.bbox.w, inst.bbox.h};
  j["label"] = label_name(inst.label);
  json kps = json::array();
  for (const auto& kp : inst.keypoints) kps.push_back({kp.x, kp.y, static_cast<int>(kp.v)});
  j["keypoints"] = std::move(kps);
  if (inst.mask_path) j["mask_path"] = *inst.mask_path;
  if (inst.part_map_path) j["part_map_path"] = *inst.part_map_path;
  j["occlusion_pct"] = inst.occlusion_pct;
  j["occlusion_bin"] = inst.occlusion_bin;
  if (inst.manual_override) j["manual_override"] = true;
  j["provenance"] = inst.provenance;
  if (inst.synthesis) {
    const auto& s = *inst.synthesis;
    j["synthesis"] = {{"base_id", s.base_id},
                      {"occluder_id", s.occluder_id},
                      {"placement",
                       {{"x", s.placement.x}, {"y", s.placement.y}, {"scale", s.placement.scale}}},
                      {"seed", s.seed},
                      {"target_bin", s.target_bin}};
  }
  return j;
}

}  // namespace

bool is_valid(const BBox& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h) &&
         b.w > 0.0 && b.h > 0.0;
}

BBox make_box(double x, double y, double w, double h) {
  BBox b{x, y, w, h};
  if (!is_valid(b)) throw Error(ErrorCode::kInvalidBox, "box needs finite values and w, h > 0");
  return b;
}

std::string_view label_name(ClassLabel label) {
  return label == ClassLabel::kEscooterRider ? "escooter_rider" : "other_vru";
}

ClassLabel parse_label(std::string_view name) {
  if (name == "escooter_rider") return ClassLabel::kEscooterRider;
  if (name == "other_vru") return ClassLabel::kOtherVru;
  throw Error(ErrorCode::kMalformedDocument, "unknown label '" + std::string(name) + "'");
}

DatasetManifest parse_manifest(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    malformed(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) malformed("top level must be an object");

  DatasetManifest m;
  try {
    m.version = require_string(doc, "version", "manifest");
    if (m.version.empty()) malformed("manifest: empty version");
    const json& instances = require(doc, "instances", "manifest");
    if (!instances.is_array()) malformed("manifest: instances must be an array");
    if (const auto it = doc.find("metadata"); it != doc.end()) {
      if (!it->is_object()) malformed("manifest: metadata must be an object");
      for (const auto& [k, v] : it->items()) {
        if (!v.is_string()) malformed("manifest: metadata values must be strings");
        m.metadata[k] = v.get<std::string>();
      }
    }

    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, std::pair<int, int>> dims;
    m.instances.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
      GroundTruthInstance inst = parse_instance(instances[i], i);
      if (!ids.insert(inst.id).second) {
        throw Error(ErrorCode::kDuplicateId, "instance id '" + inst.id + "' appears twice");
      }
      const auto [it, inserted] =
          dims.emplace(inst.image.path, std::make_pair(inst.image.width, inst.image.height));
      if (!inserted && it->second != std::make_pair(inst.image.width, inst.image.height)) {
        malformed("image '" + inst.image.path + "' declared with conflicting dimensions");
      }
      m.instances.push_back(std::move(inst));
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  return m;
}

std::string serialize_manifest(const DatasetManifest& m) {
  json doc;
  doc["version"] = m.version;
  if (!m.metadata.empty()) doc["metadata"] = m.metadata;
  json instances = json::array();
  for (const auto& inst : m.instances) instances.push_back(instance_to_json(inst));
  doc["instances"] = std::move(instances);
  return doc.dump(1) + "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path));
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  write_file(path, serialize_manifest(m));
}

std::int64_t ManifestStats::bin_total(int bin) const {
  return counts.at(bin)[0] + counts.at(bin)[1];
}

std::int64_t ManifestStats::class_total(ClassLabel label) const {
  std::int64_t n = 0;
  for (const auto& row : counts) n += row[static_cast<int>(label)];
  return n;
}

std::int64_t ManifestStats::total() const {
  return class_total(ClassLabel::kEscooterRider) + class_total(ClassLabel::kOtherVru);
}

ManifestStats manifest_stats(const DatasetManifest& m) {
  ManifestStats s;
  for (const auto& inst : m.instances) {
    ++s.counts.at(inst.occlusion_bin)[static_cast<int>(inst.label)];
  }
  return s;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::string manifest_hash(const DatasetManifest& m) {
  return hex64(fnv1a64(serialize_manifest(m)));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace escooter
