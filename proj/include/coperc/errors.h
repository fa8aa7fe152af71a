/******************************************************************************
 * Copyright 2026 The coperc Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace coperc {

enum class ErrorCode {
  kEmptyCloud,
  kSizeMismatch,
  kInvalidViewpoint,
  kInvalidArgument,
  kDecodeError,
  kProfileIncomplete,
  kCalibrationError,
  kDatasetMiss,
  kFrameError,
  kParseError,
  kIoError,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures surface as this exception; the code identifies the
// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyCloud:
      return "EmptyCloud";
    case ErrorCode::kSizeMismatch:
      return "SizeMismatch";
    case ErrorCode::kInvalidViewpoint:
      return "InvalidViewpoint";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kDecodeError:
      return "DecodeError";
    case ErrorCode::kProfileIncomplete:
      return "ProfileIncomplete";
    case ErrorCode::kCalibrationError:
      return "CalibrationError";
    case ErrorCode::kDatasetMiss:
      return "DatasetMiss";
    case ErrorCode::kFrameError:
      return "FrameError";
    case ErrorCode::kParseError:
      return "ParseError";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

}  // namespace coperc
