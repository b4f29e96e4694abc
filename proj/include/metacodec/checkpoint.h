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

#ifndef METACODEC_CHECKPOINT_H_
#define METACODEC_CHECKPOINT_H_

// Persistence for model checkpoints and bias codebooks. Both use one
// archive layout:
//   "MCKP" | u32 version | u32 header length | JSON header | tensor bytes
// where the header lists every tensor's name, dtype, shape and byte offset.
// Tensor data is little-endian float32.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "metacodec/bias.h"
#include "metacodec/model.h"

namespace metacodec {

constexpr uint32_t kArchiveVersion = 1;

using CodebookSet = std::map<int, BiasCodebook>;  // keyed by codec id

std::vector<uint8_t> SerializeCheckpoint(const CodecModel& model);
CodecModel ParseCheckpoint(std::span<const uint8_t> bytes);
void SaveCheckpoint(const CodecModel& model, const std::string& path);
CodecModel LoadCheckpoint(const std::string& path);

std::vector<uint8_t> SerializeCodebooks(const CodebookSet& books);
CodebookSet ParseCodebooks(std::span<const uint8_t> bytes);
void SaveCodebooks(const CodebookSet& books, const std::string& path);
CodebookSet LoadCodebooks(const std::string& path);

// Writes to a sibling temporary file and renames it over `path`.
void WriteFileAtomic(const std::string& path, std::span<const uint8_t> bytes);
void WriteTextAtomic(const std::string& path, const std::string& text);
std::vector<uint8_t> ReadFileBytes(const std::string& path);

}  // namespace metacodec

#endif  // METACODEC_CHECKPOINT_H_
