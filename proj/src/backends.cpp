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

#include "escooter/backends.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include "escooter/error.hpp"

namespace escooter {

using nlohmann::json;

namespace {

[[noreturn]] void backend_failure(const std::string& what) {
  throw Error(ErrorCode::kBackendFailure, what);
}

Detection detection_from_json(const json& j) {
  if (!j.is_object() || !j.contains("bbox") || !j.contains("score")) {
    backend_failure("detection must be {bbox, score}");
  }
  const json& b = j.at("bbox");
  if (!b.is_array() || b.size() != 4) backend_failure("detection bbox must be [x, y, w, h]");
  for (const auto& v : b) {
    if (!v.is_number()) backend_failure("detection bbox entries must be numbers");
  }
  if (!j.at("score").is_number()) backend_failure("detection score must be a number");
  return Detection{BBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                        b[3].get<double>()},
                   j.at("score").get<double>()};
}

}  // namespace

json to_json(const BackendDescriptor& d) {
  return json{{"name", d.name},
              {"version", d.version},
              {"max_concurrent_sessions", d.max_concurrent_sessions},
              {"needs_pixels", d.needs_pixels}};
}

BackendDescriptor descriptor_from_json(const json& j) {
  BackendDescriptor d;
  if (!j.is_object()) throw Error(ErrorCode::kMalformedDocument, "backend descriptor must be an object");
  d.name = j.value("name", std::string("unknown"));
  d.version = j.value("version", std::string(""));
  d.max_concurrent_sessions = j.value("max_concurrent_sessions", 1);
  d.needs_pixels = j.value("needs_pixels", false);
  return d;
}

// ---------------------------------------------------------------------------

OracleDetector::OracleDetector(const DatasetManifest& manifest) {
  for (const auto& inst : manifest.instances) {
    boxes_[inst.image.path].push_back(
        clip_to_image(inst.bbox, inst.image.width, inst.image.height));
  }
}

BackendDescriptor OracleDetector::descriptor() const {
  return BackendDescriptor{"oracle-detector", ESCOOTER_VERSION, 0, false};
}

std::vector<Detection> OracleDetector::detect(const ImageInput& image) {
  std::vector<Detection> out;
  const auto it = boxes_.find(image.image_id);
  if (it == boxes_.end()) return out;
  for (const BBox& b : it->second) out.push_back({b, 1.0});
  return out;
}

PrecomputedDetector PrecomputedDetector::from_file(const std::filesystem::path& path) {
  return from_json(read_file(path));
}

PrecomputedDetector PrecomputedDetector::from_json(std::string_view document) {
  PrecomputedDetector det;
  try {
    const json doc = json::parse(document);
    det.descriptor_ = descriptor_from_json(doc.value("detector", json::object()));
    if (det.descriptor_.name == "unknown") det.descriptor_.name = "precomputed-detections";
    det.descriptor_.max_concurrent_sessions = 0;
    det.descriptor_.needs_pixels = false;
    const json& dets = doc.at("detections");
    if (!dets.is_object()) throw Error(ErrorCode::kMalformedDocument, "detections must be an object");
    for (const auto& [image_id, list] : dets.items()) {
      auto& out = det.detections_[image_id];
      if (!list.is_array()) throw Error(ErrorCode::kMalformedDocument, "detection list expected");
      for (const auto& d : list) out.push_back(detection_from_json(d));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedDocument, std::string("detections file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBackendFailure) {
      throw Error(ErrorCode::kMalformedDocument, std::string("detections file: ") + e.what());
    }
    throw;
  }
  return det;
}

std::vector<Detection> PrecomputedDetector::detect(const ImageInput& image) {
  const auto it = detections_.find(image.image_id);
  if (it == detections_.end()) return {};
  return it->second;
}

std::string serialize_detections(const BackendDescriptor& descriptor,
                                 const std::map<std::string, std::vector<Detection>>& detections) {
  json doc;
  doc["detector"] = to_json(descriptor);
  json dets = json::object();
  for (const auto& [image_id, list] : detections) {
    json arr = json::array();
    for (const auto& d : list) {
      arr.push_back({{"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}}, {"score", d.score}});
    }
    dets[image_id] = std::move(arr);
  }
  doc["detections"] = std::move(dets);
  return doc.dump(1) + "\n";
}

OracleClassifier::OracleClassifier(const DatasetManifest& manifest, double min_iou)
    : min_iou_(min_iou) {
  for (const auto& inst : manifest.instances) {
    gt_[inst.image.path].push_back(
        {clip_to_image(inst.bbox, inst.image.width, inst.image.height), inst.label});
  }
}

BackendDescriptor OracleClassifier::descriptor() const {
  return BackendDescriptor{"oracle-classifier", ESCOOTER_VERSION, 0, false};
}

ClassifierOutput OracleClassifier::classify(const CropInput& crop) {
  const auto it = gt_.find(crop.image_id);
  if (it == gt_.end()) return {std::string(label_name(ClassLabel::kOtherVru)), 0.0};
  double best = -1.0;
  const Entry* match = nullptr;
  for (const Entry& e : it->second) {
    const double v = iou(e.box, crop.candidate);
    if (v > best) {
      best = v;
      match = &e;
    }
  }
  if (match == nullptr || best < min_iou_ || match->label != ClassLabel::kEscooterRider) {
    return {std::string(label_name(ClassLabel::kOtherVru)), 0.0};
  }
  return {std::string(label_name(ClassLabel::kEscooterRider)), 1.0};
}

ConstantClassifier::ConstantClassifier(double score) : score_(score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "constant classifier score must be in [0, 1]");
  }
}

BackendDescriptor ConstantClassifier::descriptor() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "constant-classifier(%.17g)", score_);
  return BackendDescriptor{buf, ESCOOTER_VERSION, 0, false};
}

ClassifierOutput ConstantClassifier::classify(const CropInput&) {
  return {std::string(label_name(score_ >= 0.5 ? ClassLabel::kEscooterRider : ClassLabel::kOtherVru)),
          score_};
}

// ---------------------------------------------------------------------------

namespace {

bool is_earlier_id(const std::string& id, std::uint64_t current) {
  if (id.empty() || id.size() > 19 || id.find_first_not_of("0123456789") != std::string::npos) return false;
  return std::stoull(id) < current;
}

}  // namespace

AdapterProcess::AdapterProcess(const std::string& command, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  ::signal(SIGPIPE, SIG_IGN);
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) backend_failure("pipe: " + std::string(std::strerror(errno)));
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    backend_failure("pipe: " + std::string(std::strerror(errno)));
  }
  pid_ = ::fork();
  if (pid_ < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    backend_failure("fork: " + std::string(std::strerror(errno)));
  }
  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  to_child_ = to_child[1];
  from_child_ = from_child[0];
  try {
    hello_ = call("hello", json::object());
  } catch (const Error& e) {
    backend_failure("adapter handshake failed (" + command + "): " + e.what());
  }
}

AdapterProcess::~AdapterProcess() {
  if (to_child_ >= 0) ::close(to_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }
  if (from_child_ >= 0) ::close(from_child_);
}

BackendDescriptor AdapterProcess::descriptor() const {
  BackendDescriptor d;
  d.name = hello_.value("name", std::string("external-adapter"));
  d.version = hello_.value("version", std::string(""));
  d.max_concurrent_sessions = hello_.value("max_concurrent_sessions", 1);
  return d;
}

bool AdapterProcess::supports(const std::string& op) const {
  const auto it = hello_.find("ops");
  if (it == hello_.end() || !it->is_array()) return false;
  for (const auto& v : *it) {
    if (v.is_string() && v.get<std::string>() == op) return true;
  }
  return false;
}

bool AdapterProcess::alive() {
  if (pid_ <= 0) return false;
  int status = 0;
  return ::waitpid(pid_, &status, WNOHANG) == 0;
}

void AdapterProcess::write_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      backend_failure("adapter write failed: " + std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string AdapterProcess::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) backend_failure("adapter timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      backend_failure("adapter poll failed: " + std::string(std::strerror(errno)));
    }
    if (rc == 0) backend_failure("adapter timed out");
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      backend_failure("adapter read failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) backend_failure("adapter closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

json AdapterProcess::call_raw(const std::string& line) {
  std::lock_guard<std::mutex> lock(mu_);
  write_line(line);
  const std::string reply = read_line();
  try {
    return json::parse(reply);
  } catch (const json::exception&) {
    backend_failure("adapter reply is not JSON: " + reply);
  }
}

json AdapterProcess::call(const std::string& op, const json& payload) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string id = std::to_string(next_id_++);
  write_line(json{{"op", op}, {"id", id}, {"payload", payload}}.dump());
  json resp;
  for (;;) {
    const std::string reply = read_line();
    try {
      resp = json::parse(reply);
    } catch (const json::exception&) {
      backend_failure("adapter reply is not JSON: " + reply);
    }
    const auto it = resp.is_object() ? resp.find("id") : resp.end();
    if (it != resp.end() && it->is_string() && it->get<std::string>() == id) break;
    // A late reply to a request that already timed out; drop it.
    if (it != resp.end() && it->is_string() && is_earlier_id(it->get<std::string>(), next_id_ - 1)) continue;
    backend_failure("adapter reply does not echo request id " + id);
  }
  if (!resp.value("ok", false)) {
    backend_failure("adapter " + op + " failed: " + resp.value("error", std::string("unknown error")));
  }
  return resp.value("payload", json::object());
}

ExternalDetector::ExternalDetector(std::shared_ptr<AdapterProcess> process)
    : process_(std::move(process)) {
  if (!process_->supports("detect")) backend_failure("adapter does not offer 'detect'");
}

BackendDescriptor ExternalDetector::descriptor() const { return process_->descriptor(); }

std::vector<Detection> ExternalDetector::detect(const ImageInput& image) {
  const json payload = process_->call(
      "detect",
      {{"image_path", image.path.string()}, {"width", image.width}, {"height", image.height}});
  std::vector<Detection> out;
  const auto it = payload.find("detections");
  if (it == payload.end() || !it->is_array()) backend_failure("detect reply lacks a detections list");
  for (const auto& d : *it) out.push_back(detection_from_json(d));
  return out;
}

ExternalClassifier::ExternalClassifier(std::shared_ptr<AdapterProcess> process)
    : process_(std::move(process)) {
  if (!process_->supports("classify")) backend_failure("adapter does not offer 'classify'");
}

BackendDescriptor ExternalClassifier::descriptor() const {
  BackendDescriptor d = process_->descriptor();
  d.needs_pixels = true;
  return d;
}

ClassifierOutput ExternalClassifier::classify(const CropInput& crop) {
  if (!crop.crop_path) backend_failure("external classifier needs a crop file");
  const json payload = process_->call("classify", {{"crop_path", crop.crop_path->string()},
                                                    {"image_id", crop.image_id},
                                                    {"candidate_index", crop.candidate_index}});
  if (!payload.contains("score") || !payload.at("score").is_number()) {
    backend_failure("classify reply lacks a numeric score");
  }
  return {payload.value("label", std::string()), payload.at("score").get<double>()};
}

}  // namespace escooter
