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

#ifndef METACODEC_RANGE_CODER_H_
#define METACODEC_RANGE_CODER_H_

// 32-bit range coder with 16-bit probability precision and byte-wise
// renormalization (carry handled with a cached byte, LZMA style).
//
// Stream conventions:
//  * the always-zero leading byte of the classic scheme is not emitted;
//  * the final interval is closed on the value with the most trailing zero
//    bits, and trailing 0x00 bytes written by that final flush are dropped.
//    The decoder reads zeros past the end of its buffer, so it never touches
//    memory beyond it.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace metacodec {

constexpr int kProbabilityBits = 16;
constexpr uint32_t kProbabilityTotal = uint32_t{1} << kProbabilityBits;

// Cumulative counts over an alphabet: cum[0] = 0 < cum[1] < ... <
// cum[A] = 2^16. Every symbol has width >= 1.
struct CdfTable {
  std::vector<uint32_t> cum;

  size_t alphabet() const { return cum.empty() ? 0 : cum.size() - 1; }
  uint32_t start(size_t s) const { return cum[s]; }
  uint32_t freq(size_t s) const { return cum[s + 1] - cum[s]; }
  bool Valid() const;
};

// Largest-remainder apportionment of 2^16 counts. Every symbol receives at
// least one count; ties go to the lower index; any excess created by the
// one-count minimum is taken from the largest bucket (lowest index on ties).
CdfTable QuantizeCdf(std::span<const double> pmf);
// Same, writing the A starts (cum[0..A-1]) into a flat 16-bit buffer.
void QuantizeCdfInto(std::span<const double> pmf, std::span<uint16_t> starts);

class RangeEncoder {
 public:
  void Encode(uint32_t start, uint32_t freq);
  std::vector<uint8_t> Finish();

 private:
  void ShiftLow();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
  bool first_byte_pending_ = true;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);

  // Position inside [0, 2^16) of the next symbol.
  uint32_t Target();
  void Consume(uint32_t start, uint32_t freq);
  // Finds the symbol whose [starts[s], next) contains Target() and consumes
  // it. `starts` holds A increasing values with starts[0] = 0.
  uint32_t DecodeSymbol(std::span<const uint16_t> starts);

  size_t bytes_consumed() const { return pos_; }

 private:
  uint8_t NextByte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t r_ = 0;
};

std::vector<uint8_t> AcEncode(std::span<const uint32_t> symbols,
                              std::span<const CdfTable> cdfs);

// `provider(t)` must return the table the encoder used at step t.
using CdfProvider = std::function<const CdfTable&(size_t step)>;
std::vector<uint32_t> AcDecode(std::span<const uint8_t> bytes,
                               const CdfProvider& provider, size_t count);

}  // namespace metacodec

#endif  // METACODEC_RANGE_CODER_H_
