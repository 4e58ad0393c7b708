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

#include "escooter/pipeline.hpp"

#include <unistd.h>

#include <omp.h>

#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <map>
#include <mutex>

#include "escooter/error.hpp"

namespace escooter {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Caps concurrent calls into one backend at its declared session count.
class SessionGate {
 public:
  explicit SessionGate(int limit) : limit_(limit) {}

  class Lease {
   public:
    explicit Lease(SessionGate& g) : gate_(g) { gate_.acquire(); }
    ~Lease() { gate_.release(); }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;

   private:
    SessionGate& gate_;
  };

 private:
  void acquire() {
    if (limit_ <= 0) return;
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return active_ < limit_; });
    ++active_;
  }
  void release() {
    if (limit_ <= 0) return;
    {
      std::lock_guard<std::mutex> lock(mu_);
      --active_;
    }
    cv_.notify_one();
  }

  int limit_;
  int active_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

class GatedDetector final : public DetectorBackend {
 public:
  explicit GatedDetector(DetectorBackend& inner)
      : inner_(inner), gate_(inner.descriptor().max_concurrent_sessions) {}
  BackendDescriptor descriptor() const override { return inner_.descriptor(); }
  std::vector<Detection> detect(const ImageInput& image) override {
    SessionGate::Lease lease(gate_);
    return inner_.detect(image);
  }

 private:
  DetectorBackend& inner_;
  SessionGate gate_;
};

class GatedClassifier final : public ClassifierBackend {
 public:
  explicit GatedClassifier(ClassifierBackend& inner)
      : inner_(inner), gate_(inner.descriptor().max_concurrent_sessions) {}
  BackendDescriptor descriptor() const override { return inner_.descriptor(); }
  ClassifierOutput classify(const CropInput& crop) override {
    SessionGate::Lease lease(gate_);
    return inner_.classify(crop);
  }

 private:
  ClassifierBackend& inner_;
  SessionGate gate_;
};

std::filesystem::path crop_directory(const PipelineConfig& cfg) {
  if (!cfg.crop_dir.empty()) return cfg.crop_dir;
  return std::filesystem::temp_directory_path() /
         ("escooter_crops_" + std::to_string(::getpid()));
}

std::string file_stem_for(const std::string& image_id) {
  std::string stem;
  for (const char c : image_id) {
    stem.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  }
  if (stem.size() > 64) stem = stem.substr(stem.size() - 64);
  return stem + "_" + hex64(fnv1a64(image_id)).substr(0, 8);
}

json box_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }
json rect_json(const PixelRect& r) { return json::array({r.x, r.y, r.w, r.h}); }

BBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::kMalformedDocument, "box must be [x, y, w, h]");
  return BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

PixelRect rect_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::kMalformedDocument, "rect must be [x, y, w, h]");
  return PixelRect{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json candidate_json(const CandidateTrace& c) {
  json j;
  j["index"] = c.index;
  j["bbox"] = box_json(c.bbox);
  j["score"] = c.score;
  j["passed_floor"] = c.passed_floor;
  j["gated"] = c.gated;
  if (c.expanded) j["expanded"] = box_json(*c.expanded);
  if (c.clipped) j["clipped"] = box_json(*c.clipped);
  if (c.crop) j["crop"] = rect_json(*c.crop);
  if (c.classifier) j["classifier"] = {{"label", c.classifier->label}, {"score", c.classifier->score}};
  j["rider"] = c.rider;
  if (c.dropped) j["dropped"] = *c.dropped;
  return j;
}

CandidateTrace candidate_from(const json& j) {
  CandidateTrace c;
  c.index = j.at("index").get<int>();
  c.bbox = box_from(j.at("bbox"));
  c.score = j.at("score").get<double>();
  c.passed_floor = j.at("passed_floor").get<bool>();
  c.gated = j.at("gated").get<bool>();
  if (j.contains("expanded")) c.expanded = box_from(j.at("expanded"));
  if (j.contains("clipped")) c.clipped = box_from(j.at("clipped"));
  if (j.contains("crop")) c.crop = rect_from(j.at("crop"));
  if (j.contains("classifier")) {
    c.classifier = ClassifierOutput{j.at("classifier").at("label").get<std::string>(),
                                    j.at("classifier").at("score").get<double>()};
  }
  c.rider = j.at("rider").get<bool>();
  if (j.contains("dropped")) c.dropped = j.at("dropped").get<std::string>();
  return c;
}

void check_detection(const Detection& d, const ImageInput& image) {
  constexpr double kSlack = 0.5;
  if (!is_valid(d.bbox)) throw Error(ErrorCode::kBackendFailure, "detector returned an invalid box");
  if (!(d.score >= 0.0 && d.score <= 1.0)) {
    throw Error(ErrorCode::kBackendFailure, "detector score outside [0, 1]");
  }
  if (d.bbox.x < -kSlack || d.bbox.y < -kSlack || d.bbox.right() > image.width + kSlack ||
      d.bbox.bottom() > image.height + kSlack) {
    throw Error(ErrorCode::kBackendFailure, "detector box outside image " + image.image_id);
  }
}

}  // namespace

std::string_view mode_name(PipelineMode mode) {
  return mode == PipelineMode::kBaseline ? "baseline" : "occlusion_aware";
}

PipelineMode parse_mode(std::string_view name) {
  if (name == "baseline") return PipelineMode::kBaseline;
  if (name == "occlusion_aware") return PipelineMode::kOcclusionAware;
  throw Error(ErrorCode::kInvalidConfig, "unknown pipeline mode '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  expansion.validate();
  if (!(score_floor >= 0.0 && score_floor <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "score_floor must be in [0, 1]");
  }
  if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "decision_threshold must be in [0, 1]");
  }
  if (workers < 0) throw Error(ErrorCode::kInvalidConfig, "workers must be >= 0");
}

std::vector<const ImageRecord*> PipelineRun::failures() const {
  std::vector<const ImageRecord*> out;
  for (const auto& r : images) {
    if (r.error_code) out.push_back(&r);
  }
  return out;
}

RgbaImage crop(const RgbaImage& image, const BBox& clipped) {
  const PixelRect r = to_pixel_rect(clipped);
  if (r.x < 0 || r.y < 0 || r.x + r.w > image.width() || r.y + r.h > image.height()) {
    throw Error(ErrorCode::kNoOverlap, "crop box is not clipped to the image");
  }
  return crop_pixels(image, r);
}

ImageRecord run_image(const ImageInput& image, const PipelineConfig& cfg, DetectorBackend& det,
                      ClassifierBackend& cls) {
  ImageRecord rec;
  rec.image_id = image.image_id;

  auto t0 = Clock::now();
  const std::vector<Detection> detections = det.detect(image);
  rec.timings.detect_ms = ms_since(t0);
  for (const auto& d : detections) check_detection(d, image);

  const bool needs_pixels = cls.descriptor().needs_pixels;
  std::optional<RgbaImage> pixels;
  std::filesystem::path crop_dir;
  if (needs_pixels) {
    t0 = Clock::now();
    pixels = read_png_rgba(image.path);
    if (pixels->width() != image.width || pixels->height() != image.height) {
      throw Error(ErrorCode::kImageUnreadable,
                  image.image_id + ": decoded size differs from the manifest");
    }
    crop_dir = crop_directory(cfg);
    std::filesystem::create_directories(crop_dir);
    rec.timings.crop_ms += ms_since(t0);
  }

  for (std::size_t i = 0; i < detections.size(); ++i) {
    CandidateTrace c;
    c.index = static_cast<int>(i);
    c.bbox = detections[i].bbox;
    c.score = detections[i].score;
    c.passed_floor = c.score >= cfg.score_floor;
    if (!c.passed_floor) {
      rec.candidates.push_back(std::move(c));
      continue;
    }

    t0 = Clock::now();
    c.gated = aspect_gate(c.bbox, cfg.expansion);
    c.expanded = cfg.mode == PipelineMode::kBaseline
                     ? expand_baseline(c.bbox)
                     : expand_occlusion_aware(c.bbox, cfg.expansion);
    try {
      c.clipped = clip_to_image(*c.expanded, image.width, image.height);
      c.crop = to_pixel_rect(*c.clipped);
    } catch (const Error& e) {
      c.dropped = std::string(error_code_name(e.code()));
      rec.timings.expand_ms += ms_since(t0);
      rec.candidates.push_back(std::move(c));
      continue;
    }
    rec.timings.expand_ms += ms_since(t0);

    CropInput input{image.image_id, c.index, c.bbox, *c.crop, std::nullopt};
    if (needs_pixels) {
      t0 = Clock::now();
      const auto path = crop_dir / (file_stem_for(image.image_id) + "_" + std::to_string(i) + ".png");
      write_png(path, crop_pixels(*pixels, *c.crop));
      input.crop_path = path;
      rec.timings.crop_ms += ms_since(t0);
    }

    t0 = Clock::now();
    const ClassifierOutput out = cls.classify(input);
    rec.timings.classify_ms += ms_since(t0);
    if (!(out.score >= 0.0 && out.score <= 1.0)) {
      throw Error(ErrorCode::kBackendFailure, "classifier score outside [0, 1]");
    }
    c.classifier = out;
    c.rider = out.score >= cfg.decision_threshold;
    rec.candidates.push_back(std::move(c));
  }
  return rec;
}

PipelineRun run_dataset(const DatasetManifest& manifest, const std::filesystem::path& base_dir,
                        const PipelineConfig& cfg, DetectorBackend& det, ClassifierBackend& cls) {
  cfg.validate();
  std::map<std::string, ImageInput> unique;
  for (const auto& inst : manifest.instances) {
    if (unique.count(inst.image.path) != 0) continue;
    std::filesystem::path p(inst.image.path);
    if (p.is_relative()) p = base_dir / p;
    unique.emplace(inst.image.path,
                   ImageInput{inst.image.path, p, inst.image.width, inst.image.height});
  }
  std::vector<ImageInput> images;
  images.reserve(unique.size());
  for (auto& [id, input] : unique) images.push_back(std::move(input));

  GatedDetector gated_det(det);
  GatedClassifier gated_cls(cls);

  std::vector<ImageRecord> records(images.size());
  const std::int64_t n = static_cast<std::int64_t>(images.size());
  const int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      records[i] = run_image(images[i], cfg, gated_det, gated_cls);
    } catch (const Error& e) {
      records[i] = ImageRecord{};
      records[i].image_id = images[i].image_id;
      records[i].error_code = std::string(error_code_name(e.code()));
      records[i].error_message = e.what();
    } catch (const std::exception& e) {
      records[i] = ImageRecord{};
      records[i].image_id = images[i].image_id;
      records[i].error_code = "Internal";
      records[i].error_message = e.what();
    }
  }

  PipelineRun run;
  run.config = cfg;
  run.detector = det.descriptor();
  run.classifier = cls.descriptor();
  run.manifest_hash = manifest_hash(manifest);
  run.images = std::move(records);
  return run;
}

json to_json(const PipelineConfig& cfg) {
  return json{{"mode", mode_name(cfg.mode)},
              {"expansion",
               {{"aspect_gate_threshold", cfg.expansion.aspect_gate_threshold},
                {"k_upright", cfg.expansion.k_upright},
                {"k_occluded", cfg.expansion.k_occluded},
                {"lateral_factor", cfg.expansion.lateral_factor}}},
              {"score_floor", cfg.score_floor},
              {"decision_threshold", cfg.decision_threshold},
              {"workers", cfg.workers},
              {"record_timings", cfg.record_timings},
              {"crop_dir", cfg.crop_dir}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig cfg;
  try {
    cfg.mode = parse_mode(j.at("mode").get<std::string>());
    const json& e = j.at("expansion");
    cfg.expansion.aspect_gate_threshold = e.at("aspect_gate_threshold").get<double>();
    cfg.expansion.k_upright = e.at("k_upright").get<double>();
    cfg.expansion.k_occluded = e.at("k_occluded").get<double>();
    cfg.expansion.lateral_factor = e.at("lateral_factor").get<double>();
    cfg.score_floor = j.at("score_floor").get<double>();
    cfg.decision_threshold = j.at("decision_threshold").get<double>();
    cfg.workers = j.value("workers", 0);
    cfg.record_timings = j.value("record_timings", false);
    cfg.crop_dir = j.value("crop_dir", std::string());
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kInvalidConfig, std::string("pipeline config: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

std::string pipeline_config_hash(const PipelineConfig& cfg) { return hex64(fnv1a64(to_json(cfg).dump())); }

std::string serialize_run(const PipelineRun& run) {
  json doc;
  doc["toolkit_version"] = ESCOOTER_VERSION;
  doc["config"] = to_json(run.config);
  doc["config_hash"] = pipeline_config_hash(run.config);
  doc["backends"] = {{"detector", to_json(run.detector)}, {"classifier", to_json(run.classifier)}};
  doc["manifest_hash"] = run.manifest_hash;
  json images = json::array();
  json failures = json::array();
  for (const auto& rec : run.images) {
    json r;
    r["image_id"] = rec.image_id;
    json cands = json::array();
    for (const auto& c : rec.candidates) cands.push_back(candidate_json(c));
    r["candidates"] = std::move(cands);
    if (rec.error_code) {
      r["error"] = {{"code", *rec.error_code}, {"message", rec.error_message.value_or("")}};
      failures.push_back(
          {{"image_id", rec.image_id}, {"code", *rec.error_code}, {"message", rec.error_message.value_or("")}});
    }
    if (run.config.record_timings) {
      r["timings_ms"] = {{"detect", rec.timings.detect_ms},
                         {"expand", rec.timings.expand_ms},
                         {"crop", rec.timings.crop_ms},
                         {"classify", rec.timings.classify_ms}};
    }
    images.push_back(std::move(r));
  }
  doc["images"] = std::move(images);
  doc["failures"] = std::move(failures);
  return doc.dump(1) + "\n";
}

PipelineRun parse_run(std::string_view document) {
  PipelineRun run;
  try {
    const json doc = json::parse(document);
    run.config = pipeline_config_from_json(doc.at("config"));
    run.detector = descriptor_from_json(doc.at("backends").at("detector"));
    run.classifier = descriptor_from_json(doc.at("backends").at("classifier"));
    run.manifest_hash = doc.at("manifest_hash").get<std::string>();
    for (const auto& r : doc.at("images")) {
      ImageRecord rec;
      rec.image_id = r.at("image_id").get<std::string>();
      for (const auto& c : r.at("candidates")) rec.candidates.push_back(candidate_from(c));
      if (r.contains("error")) {
        rec.error_code = r.at("error").at("code").get<std::string>();
        rec.error_message = r.at("error").at("message").get<std::string>();
      }
      if (r.contains("timings_ms")) {
        const json& t = r.at("timings_ms");
        rec.timings = StageTimings{t.at("detect").get<double>(), t.at("expand").get<double>(),
                                   t.at("crop").get<double>(), t.at("classify").get<double>()};
      }
      run.images.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("pipeline run: ") + e.what());
  }
  return run;
}

}  // namespace escooter
