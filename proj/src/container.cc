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

#include "metacodec/container.h"

#include <string>

#include "metacodec/error.h"

namespace metacodec {

namespace {

void PutVarint(std::vector<uint8_t>& out, uint32_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<uint8_t>(v));
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  uint8_t Byte() {
    METACODEC_CHECK(pos_ < bytes_.size(), ErrorCode::kTruncated,
                    "container ends inside the header");
    return bytes_[pos_++];
  }

  uint32_t Varint() {
    uint64_t v = 0;
    for (int shift = 0; shift < 35; shift += 7) {
      const uint8_t b = Byte();
      v |= static_cast<uint64_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0) {
        METACODEC_CHECK(b != 0 || shift == 0, ErrorCode::kLengthMismatch,
                        "non-canonical varint");
        METACODEC_CHECK(v <= 0xFFFFFFFFu, ErrorCode::kLengthMismatch,
                        "varint exceeds 32 bits");
        return static_cast<uint32_t>(v);
      }
    }
    throw Error(ErrorCode::kLengthMismatch, "varint longer than 5 bytes");
  }

  uint32_t U32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(Byte()) << (8 * i);
    return v;
  }

  std::vector<uint8_t> Bytes(uint32_t n) {
    METACODEC_CHECK(bytes_.size() - pos_ >= n, ErrorCode::kTruncated,
                    "container shorter than its declared lengths");
    std::vector<uint8_t> out(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                             bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
  }

  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

void Validate(const ContainerHeader& h) {
  METACODEC_CHECK(h.bits >= 1 && h.bits <= 8, ErrorCode::kInvalidArgument,
                  "header bits must be in [1,8]");
  METACODEC_CHECK(h.channels >= 1, ErrorCode::kInvalidArgument,
                  "header channel count must be positive");
  METACODEC_CHECK(h.num_scales >= 1 && h.num_scales <= 16, ErrorCode::kInvalidArgument,
                  "header scale count must be in [1,16]");
  METACODEC_CHECK(h.downsample_log2 <= 8, ErrorCode::kInvalidArgument,
                  "header downsample exponent too large");
  METACODEC_CHECK((h.flags & ~kKnownFlags) == 0, ErrorCode::kInvalidArgument,
                  "unknown header flags");
  METACODEC_CHECK(h.height >= 1 && h.width >= 1, ErrorCode::kLengthMismatch,
                  "image dimensions must be positive");
  const uint32_t s = h.downsample();
  auto aligned = [s](uint32_t v) { return (v + s - 1) / s * s; };
  METACODEC_CHECK(h.padded_height == aligned(h.height) && h.padded_width == aligned(h.width),
                  ErrorCode::kLengthMismatch,
                  "padded dimensions inconsistent with original dimensions");
}

}  // namespace

std::vector<uint8_t> SerializeContainer(const Bitstream& bs) {
  const ContainerHeader& h = bs.header;
  METACODEC_CHECK(h.version == kContainerVersion, ErrorCode::kUnsupportedVersion,
                  "only container version 1 can be written");
  Validate(h);
  METACODEC_CHECK(((h.flags & kFlagBiasIndices) != 0) == !bs.bias_indices.empty(),
                  ErrorCode::kLengthMismatch, "bias flag and bias segment disagree");
  std::vector<uint8_t> out;
  out.reserve(32 + bs.bias_indices.size() + bs.payload.size());
  out.push_back(kContainerMagic[0]);
  out.push_back(kContainerMagic[1]);
  out.push_back(h.version);
  out.push_back(h.codec_id);
  out.push_back(h.bits);
  out.push_back(h.channels);
  out.push_back(h.num_scales);
  out.push_back(h.downsample_log2);
  out.push_back(h.flags);
  PutVarint(out, h.padded_height);
  PutVarint(out, h.padded_width);
  PutVarint(out, h.height);
  PutVarint(out, h.width);
  PutVarint(out, static_cast<uint32_t>(bs.bias_indices.size()));
  PutVarint(out, static_cast<uint32_t>(bs.payload.size()));
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(h.checksum >> (8 * i)));
  out.insert(out.end(), bs.bias_indices.begin(), bs.bias_indices.end());
  out.insert(out.end(), bs.payload.begin(), bs.payload.end());
  return out;
}

Bitstream ParseContainer(std::span<const uint8_t> bytes) {
  Reader in(bytes);
  const uint8_t m0 = in.Byte();
  const uint8_t m1 = in.Byte();
  METACODEC_CHECK(m0 == kContainerMagic[0] && m1 == kContainerMagic[1], ErrorCode::kBadMagic,
                  "not a metacodec bitstream");
  Bitstream bs;
  ContainerHeader& h = bs.header;
  h.version = in.Byte();
  METACODEC_CHECK(h.version == kContainerVersion, ErrorCode::kUnsupportedVersion,
                  "unsupported container version " + std::to_string(h.version));
  h.codec_id = in.Byte();
  h.bits = in.Byte();
  h.channels = in.Byte();
  h.num_scales = in.Byte();
  h.downsample_log2 = in.Byte();
  h.flags = in.Byte();
  h.padded_height = in.Varint();
  h.padded_width = in.Varint();
  h.height = in.Varint();
  h.width = in.Varint();
  const uint32_t bias_len = in.Varint();
  const uint32_t payload_len = in.Varint();
  h.checksum = in.U32();
  Validate(h);
  METACODEC_CHECK(((h.flags & kFlagBiasIndices) != 0) == (bias_len > 0),
                  ErrorCode::kLengthMismatch, "bias flag and bias segment disagree");
  bs.bias_indices = in.Bytes(bias_len);
  bs.payload = in.Bytes(payload_len);
  METACODEC_CHECK(in.remaining() == 0, ErrorCode::kLengthMismatch,
                  "trailing bytes after declared payload");
  return bs;
}

}  // namespace metacodec
