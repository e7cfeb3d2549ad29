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

#ifndef CUBEEVAL_ERROR_HPP_
#define CUBEEVAL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cubeeval {

enum class ErrorCode {
  kInvalidToken,
  kInvalidState,
  kDepthUnachievable,
  kSearchBudgetExceeded,
  kMalformedText,
  kCorruptionFailed,
  kQCUnsatisfiable,
  kSchemaMismatch,
  kMissingPlaceholder,
  kDegenerateVariance,
  kConsistencyError,
  kEmptyRun,
  kConfigError,
  kIoError,
  kCacheFormat,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parser failures also record where the first offending token sits.
class MalformedText : public Error {
 public:
  MalformedText(std::size_t position, const std::string& message)
      : Error(ErrorCode::kMalformedText,
              message + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace cubeeval

#endif  // CUBEEVAL_ERROR_HPP_
