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

#ifndef METACODEC_ERROR_H_
#define METACODEC_ERROR_H_

#include <stdexcept>
#include <string>

namespace metacodec {

// Stable numeric values: they cross the C ABI and appear in CLI error output.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kShapeMismatch = 2,
  kOutOfRange = 3,
  kTruncated = 4,
  kChecksumMismatch = 5,
  kBadMagic = 6,
  kUnsupportedVersion = 7,
  kLengthMismatch = 8,
  kUnknownCodec = 9,
  kCodebookMismatch = 10,
  kIo = 11,
  kDivergence = 12,
  kEmptyInput = 13,
  kCorruptStream = 14,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace metacodec

#define METACODEC_CHECK(cond, code, msg)                        \
  do {                                                          \
    if (!(cond)) throw ::metacodec::Error((code), (msg));       \
  } while (0)

#endif  // METACODEC_ERROR_H_
