// Copyright 2026 The Metacodec Authors. All Rights Reserved.
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

#include "metacodec/error.h"

namespace metacodec {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kChecksumMismatch: return "checksum_mismatch";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kUnknownCodec: return "unknown_codec";
    case ErrorCode::kCodebookMismatch: return "codebook_mismatch";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kCorruptStream: return "corrupt_stream";
  }
  return "unknown";
}

}  // namespace metacodec
