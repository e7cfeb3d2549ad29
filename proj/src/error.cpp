// Copyright 2026 The cubeeval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cubeeval/error.hpp"

namespace cubeeval {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidToken: return "InvalidToken";
    case ErrorCode::kInvalidState: return "InvalidState";
    case ErrorCode::kDepthUnachievable: return "DepthUnachievable";
    case ErrorCode::kSearchBudgetExceeded: return "SearchBudgetExceeded";
    case ErrorCode::kMalformedText: return "MalformedText";
    case ErrorCode::kCorruptionFailed: return "CorruptionFailed";
    case ErrorCode::kQCUnsatisfiable: return "QCUnsatisfiable";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kConsistencyError: return "ConsistencyError";
    case ErrorCode::kEmptyRun: return "EmptyRun";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kCacheFormat: return "CacheFormat";
  }
  return "Unknown";
}

}  // namespace cubeeval
