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

#include "escooter/error.hpp"

namespace escooter {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedDocument: return "MalformedDocument";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kBinMismatch: return "BinMismatch";
    case ErrorCode::kOutOfRangeOcclusion: return "OutOfRangeOcclusion";
    case ErrorCode::kInvalidBox: return "InvalidBox";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kSkeletonMismatch: return "SkeletonMismatch";
    case ErrorCode::kMissingPart: return "MissingPart";
    case ErrorCode::kWeightTableInvalid: return "WeightTableInvalid";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kQuotaUnmet: return "QuotaUnmet";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kImageUnreadable: return "ImageUnreadable";
    case ErrorCode::kDegenerateCrop: return "DegenerateCrop";
    case ErrorCode::kMissingBin: return "MissingBin";
    case ErrorCode::kEmptyCounts: return "EmptyCounts";
    case ErrorCode::kManifestMismatch: return "ManifestMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBackendFailure:
    case ErrorCode::kImageUnreadable:
      return 2;
    case ErrorCode::kIo:
      return 3;
    default:
      return 1;
  }
}

}  // namespace escooter
