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

#ifndef METACODEC_CONTAINER_H_
#define METACODEC_CONTAINER_H_

// Bitstream container. Byte layout is documented in README.md.

#include <cstdint>
#include <span>
#include <vector>

namespace metacodec {

constexpr uint8_t kContainerMagic[2] = {'M', 'C'};
constexpr uint8_t kContainerVersion = 1;

constexpr uint8_t kFlagBestEffort = 0x01;
constexpr uint8_t kFlagBiasIndices = 0x02;
constexpr uint8_t kKnownFlags = kFlagBestEffort | kFlagBiasIndices;

struct ContainerHeader {
  uint8_t version = kContainerVersion;
  uint8_t codec_id = 0;
  uint8_t bits = 8;
  uint8_t channels = 8;
  uint8_t num_scales = 3;
  uint8_t downsample_log2 = 2;
  uint8_t flags = 0;
  uint32_t padded_height = 0;
  uint32_t padded_width = 0;
  uint32_t height = 0;
  uint32_t width = 0;
  uint32_t checksum = 0;

  uint32_t downsample() const { return uint32_t{1} << downsample_log2; }
  bool operator==(const ContainerHeader&) const = default;
};

struct Bitstream {
  ContainerHeader header;
  std::vector<uint8_t> bias_indices;
  std::vector<uint8_t> payload;

  bool operator==(const Bitstream&) const = default;
};

std::vector<uint8_t> SerializeContainer(const Bitstream& bitstream);
Bitstream ParseContainer(std::span<const uint8_t> bytes);

}  // namespace metacodec

#endif  // METACODEC_CONTAINER_H_
