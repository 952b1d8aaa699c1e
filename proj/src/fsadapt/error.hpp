// Copyright 2026 The fsadapt Authors.
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

#ifndef FSADAPT_ERROR_HPP_
#define FSADAPT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fsadapt {

// Numeric values are part of the C ABI (see fsadapt.h); append only.
enum class ErrorCode : int {
  kOk = 0,
  kBadMagic = 1,
  kTruncatedFile = 2,
  kDimMismatch = 3,
  kLabelOutOfRange = 4,
  kNonFiniteValue = 5,
  kIoError = 6,
  kZeroVector = 7,
  kInsufficientShots = 8,
  kDegenerateOutput = 9,
  kMissingAdapter = 10,
  kMissingSupport = 11,
  kVariantConstraintViolated = 12,
  kEmptyGrid = 13,
  kBadDimension = 14,
  kLabelSpaceMismatch = 15,
  kBadFormat = 16,
  kInvalidArgument = 17,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(ErrorCodeName(code)) + ": " + message);
}

}  // namespace fsadapt

#endif  // FSADAPT_ERROR_HPP_
