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

#include <stdexcept>
#include <string>
#include <string_view>

namespace escooter {

enum class ErrorCode {
  kMalformedDocument,
  kDuplicateId,
  kBinMismatch,
  kOutOfRangeOcclusion,
  kInvalidBox,
  kNoOverlap,
  kSkeletonMismatch,
  kMissingPart,
  kWeightTableInvalid,
  kOutOfRange,
  kInfeasible,
  kQuotaUnmet,
  kBackendFailure,
  kImageUnreadable,
  kDegenerateCrop,
  kMissingBin,
  kEmptyCounts,
  kManifestMismatch,
  kInvalidConfig,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Process exit status for a failure of this kind: 1 validation, 2 backend,
// 3 internal.
int exit_status_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace escooter
