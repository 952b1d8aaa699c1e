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

#include "fsadapt/error.hpp"

namespace fsadapt {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kInsufficientShots: return "InsufficientShots";
    case ErrorCode::kDegenerateOutput: return "DegenerateOutput";
    case ErrorCode::kMissingAdapter: return "MissingAdapter";
    case ErrorCode::kMissingSupport: return "MissingSupport";
    case ErrorCode::kVariantConstraintViolated: return "VariantConstraintViolated";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kBadDimension: return "BadDimension";
    case ErrorCode::kLabelSpaceMismatch: return "LabelSpaceMismatch";
    case ErrorCode::kBadFormat: return "BadFormat";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace fsadapt
