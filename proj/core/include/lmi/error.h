// Copyright 2026 The LMI Authors
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

#ifndef LMI_ERROR_H_
#define LMI_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace lmi {

enum class ErrorCode {
  kInvalidArgument,
  kDecompositionFailed,
  kInsufficientData,
  kUnidentifiable,
  kEstimationFailed,
  kFitRejected,
  kNumericFailure,
  kCalibrationFailed,
  kUnsupported,
};

std::string_view to_string(ErrorCode code);

/// The single exception type thrown by the library. `code()` tells callers
/// whether the failure is a bad input (kInvalidArgument) or a property of the
/// data (everything else).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The description without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kDecompositionFailed:
      return "decomposition-failed";
    case ErrorCode::kInsufficientData:
      return "insufficient-data";
    case ErrorCode::kUnidentifiable:
      return "unidentifiable";
    case ErrorCode::kEstimationFailed:
      return "estimation-failed";
    case ErrorCode::kFitRejected:
      return "fit-rejected";
    case ErrorCode::kNumericFailure:
      return "numeric-failure";
    case ErrorCode::kCalibrationFailed:
      return "calibration-failed";
    case ErrorCode::kUnsupported:
      return "unsupported";
  }
  return "unknown";
}

}  // namespace lmi

#endif  // LMI_ERROR_H_
