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

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "escooter/domain.hpp"
#include "escooter/geometry.hpp"
#include "json.hpp"

namespace escooter {

struct BackendDescriptor {
  std::string name;
  std::string version;
  // <= 0 means any number of concurrent callers.
  int max_concurrent_sessions = 1;
  // The classifier wants crop files on disk.
  bool needs_pixels = false;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

nlohmann::json to_json(const BackendDescriptor& d);
BackendDescriptor descriptor_from_json(const nlohmann::json& j);

struct Detection {
  BBox bbox;
  double score = 0.0;
};

struct ImageInput {
  std::string image_id;         // path as written in the manifest
  std::filesystem::path path;   // resolved on disk
  int width = 0;
  int height = 0;
};

struct CropInput {
  std::string image_id;
  int candidate_index = 0;
  BBox candidate;  // the detector's box, before expansion
  PixelRect rect;  // crop bounds in the source image
  std::optional<std::filesystem::path> crop_path;
};

struct ClassifierOutput {
  std::string label;
  double score = 0.0;  // probability of escooter_rider
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual std::vector<Detection> detect(const ImageInput& image) = 0;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual BackendDescriptor descriptor() const = 0;
  virtual ClassifierOutput classify(const CropInput& crop) = 0;
};

// Replays the manifest's ground-truth boxes with score 1.
class OracleDetector final : public DetectorBackend {
 public:
  explicit OracleDetector(const DatasetManifest& manifest);
  BackendDescriptor descriptor() const override;
  std::vector<Detection> detect(const ImageInput& image) override;

 private:
  std::map<std::string, std::vector<BBox>> boxes_;
};

// Reads {"detector": {...}, "detections": {image_id: [{bbox, score}]}}.
class PrecomputedDetector final : public DetectorBackend {
 public:
  static PrecomputedDetector from_file(const std::filesystem::path& path);
  static PrecomputedDetector from_json(std::string_view document);

  BackendDescriptor descriptor() const override { return descriptor_; }
  std::vector<Detection> detect(const ImageInput& image) override;

 private:
  BackendDescriptor descriptor_;
  std::map<std::string, std::vector<Detection>> detections_;
};

std::string serialize_detections(const BackendDescriptor& descriptor,
                                 const std::map<std::string, std::vector<Detection>>& detections);

// Labels a candidate with the class of the ground-truth instance it
// overlaps best (IoU >= min_iou); score 1 for riders, 0 otherwise.
class OracleClassifier final : public ClassifierBackend {
 public:
  explicit OracleClassifier(const DatasetManifest& manifest, double min_iou = 0.5);
  BackendDescriptor descriptor() const override;
  ClassifierOutput classify(const CropInput& crop) override;

 private:
  struct Entry {
    BBox box;
    ClassLabel label;
  };
  std::map<std::string, std::vector<Entry>> gt_;
  double min_iou_;
};

// Returns the same rider score for every crop.
class ConstantClassifier final : public ClassifierBackend {
 public:
  explicit ConstantClassifier(double score);
  BackendDescriptor descriptor() const override;
  ClassifierOutput classify(const CropInput& crop) override;

 private:
  double score_;
};

// Child process speaking line-delimited JSON on stdin/stdout:
//   request  {"op": "hello"|"detect"|"classify", "id": "...", "payload": {...}}
//   response {"id": "...", "ok": true, "payload": {...}} or
//            {"id": "...", "ok": false, "error": "..."}
// detect payload {"image_path", "width", "height"} ->
//   {"detections": [{"bbox": [x, y, w, h], "score": s}]}
// classify payload {"crop_path", "image_id", "candidate_index"} ->
//   {"label": "...", "score": s}
// hello -> {"name", "version", "ops": [...], "max_concurrent_sessions"}
class AdapterProcess {
 public:
  // Runs `command` through /bin/sh -c and performs the hello handshake.
  // Throws kBackendFailure when the process cannot be started or the
  // handshake fails.
  explicit AdapterProcess(const std::string& command,
                          std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~AdapterProcess();
  AdapterProcess(const AdapterProcess&) = delete;
  AdapterProcess& operator=(const AdapterProcess&) = delete;

  const nlohmann::json& hello() const { return hello_; }
  BackendDescriptor descriptor() const;
  bool supports(const std::string& op) const;

  // Sends one request and waits for the matching response payload. Throws
  // kBackendFailure on an error response, an id mismatch, a timeout or a
  // dead child.
  nlohmann::json call(const std::string& op, const nlohmann::json& payload);

  // Writes a raw line; used by conformance tests.
  nlohmann::json call_raw(const std::string& line);

  bool alive();

 private:
  std::string read_line();
  void write_line(const std::string& line);

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::uint64_t next_id_ = 0;
  nlohmann::json hello_;
};

class ExternalDetector final : public DetectorBackend {
 public:
  explicit ExternalDetector(std::shared_ptr<AdapterProcess> process);
  BackendDescriptor descriptor() const override;
  std::vector<Detection> detect(const ImageInput& image) override;

 private:
  std::shared_ptr<AdapterProcess> process_;
};

class ExternalClassifier final : public ClassifierBackend {
 public:
  explicit ExternalClassifier(std::shared_ptr<AdapterProcess> process);
  BackendDescriptor descriptor() const override;
  ClassifierOutput classify(const CropInput& crop) override;

 private:
  std::shared_ptr<AdapterProcess> process_;
};

}  // namespace escooter
