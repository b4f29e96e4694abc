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

#include "metacodec/range_coder.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metacodec/error.h"

namespace metacodec {

namespace {

constexpr uint32_t kTopValue = uint32_t{1} << 24;

}  // namespace

bool CdfTable::Valid() const {
  if (cum.size() < 2 || cum.front() != 0 || cum.back() != kProbabilityTotal) {
    return false;
  }
  for (size_t i = 1; i < cum.size(); ++i) {
    if (cum[i] <= cum[i - 1]) return false;
  }
  return true;
}

CdfTable QuantizeCdf(std::span<const double> pmf) {
  const size_t n = pmf.size();
  METACODEC_CHECK(n >= 1 && n <= kProbabilityTotal, ErrorCode::kInvalidArgument,
                  "alphabet size must be in [1, 2^16]");
  double sum = 0.0;
  for (double p : pmf) sum += std::isfinite(p) && p > 0.0 ? p : 0.0;
  const bool uniform = !(sum > 0.0) || !std::isfinite(sum);

  std::vector<int64_t> counts(n);
  std::vector<double> remainder(n);
  int64_t assigned = 0;
  for (size_t s = 0; s < n; ++s) {
    const double p = uniform ? 1.0 : (std::isfinite(pmf[s]) && pmf[s] > 0.0 ? pmf[s] : 0.0);
    const double share = p / (uniform ? static_cast<double>(n) : sum) * kProbabilityTotal;
    const double whole = std::floor(share);
    counts[s] = static_cast<int64_t>(whole);
    remainder[s] = share - whole;
    if (counts[s] < 1) {
      counts[s] = 1;
      remainder[s] = -1.0;  // already over its share
    }
    assigned += counts[s];
  }
  int64_t left = static_cast<int64_t>(kProbabilityTotal) - assigned;
  if (left > 0) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return remainder[a] > remainder[b];
    });
    for (size_t i = 0; left > 0; i = (i + 1) % n, --left) ++counts[order[i]];
  }
  while (left < 0) {
    const size_t big = static_cast<size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    const int64_t take = std::min(-left, counts[big] - 1);
    METACODEC_CHECK(take > 0, ErrorCode::kInvalidArgument,
                    "alphabet too large for 16-bit precision");
    counts[big] -= take;
    left += take;
  }

  CdfTable table;
  table.cum.resize(n + 1);
  table.cum[0] = 0;
  for (size_t s = 0; s < n; ++s) {
    table.cum[s + 1] = table.cum[s] + static_cast<uint32_t>(counts[s]);
  }
  return table;
}

void QuantizeCdfInto(std::span<const double> pmf, std::span<uint16_t> starts) {
  METACODEC_CHECK(starts.size() == pmf.size(), ErrorCode::kShapeMismatch,
                  "cdf buffer size mismatch");
  const CdfTable table = QuantizeCdf(pmf);
  for (size_t s = 0; s < pmf.size(); ++s) {
    starts[s] = static_cast<uint16_t>(table.cum[s]);
  }
}

void RangeEncoder::Encode(uint32_t start, uint32_t freq) {
  METACODEC_CHECK(freq > 0 && start + freq <= kProbabilityTotal,
                  ErrorCode::kInvalidArgument, "invalid symbol interval");
  const uint32_t r = range_ >> kProbabilityBits;
  low_ += static_cast<uint64_t>(r) * start;
  range_ = r * freq;
  while (range_ < kTopValue) {
    range_ <<= 8;
    ShiftLow();
  }
}

void RangeEncoder::ShiftLow() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t pending = cache_;
    do {
      const uint8_t byte = static_cast<uint8_t>(pending + carry);
      // The first byte covers bits above the initial 32-bit window and is
      // always zero; it is implied rather than stored.
      if (first_byte_pending_) {
        first_byte_pending_ = false;
      } else {
        out_.push_back(byte);
      }
      pending = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<uint8_t> RangeEncoder::Finish() {
  // Bytes already owed to the symbols coded so far, including the pending
  // cache run; only bytes produced by the flush below may be trimmed.
  const size_t committed = out_.size() + cache_size_ - (first_byte_pending_ ? 1 : 0);
  const uint64_t high = low_ + range_;  // exclusive
  for (int k = 32; k >= 0; --k) {
    const uint64_t mask = (uint64_t{1} << k) - 1;
    const uint64_t candidate = (low_ + mask) & ~mask;
    if (candidate < high) {
      low_ = candidate;
      break;
    }
  }
  for (int i = 0; i < 5; ++i) ShiftLow();
  while (out_.size() > committed && out_.back() == 0) out_.pop_back();
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | NextByte();
}

uint8_t RangeDecoder::NextByte() {
  if (pos_ < bytes_.size()) return bytes_[pos_++];
  return 0;
}

uint32_t RangeDecoder::Target() {
  r_ = range_ >> kProbabilityBits;
  const uint32_t target = code_ / r_;
  METACODEC_CHECK(target < kProbabilityTotal, ErrorCode::kCorruptStream,
                  "range decoder left its interval");
  return target;
}

void RangeDecoder::Consume(uint32_t start, uint32_t freq) {
  code_ -= r_ * start;
  range_ = r_ * freq;
  METACODEC_CHECK(code_ < range_, ErrorCode::kCorruptStream,
                  "range decoder left its interval");
  while (range_ < kTopValue) {
    code_ = (code_ << 8) | NextByte();
    range_ <<= 8;
  }
}

uint32_t RangeDecoder::DecodeSymbol(std::span<const uint16_t> starts) {
  const uint32_t target = Target();
  auto it = std::upper_bound(starts.begin(), starts.end(), target);
  const size_t s = static_cast<size_t>(it - starts.begin()) - 1;
  const uint32_t next = s + 1 < starts.size() ? starts[s + 1] : kProbabilityTotal;
  Consume(starts[s], next - starts[s]);
  return static_cast<uint32_t>(s);
}

std::vector<uint8_t> AcEncode(std::span<const uint32_t> symbols,
                              std::span<const CdfTable> cdfs) {
  METACODEC_CHECK(symbols.size() == cdfs.size(), ErrorCode::kShapeMismatch,
                  "one cdf table per symbol required");
  RangeEncoder encoder;
  for (size_t t = 0; t < symbols.size(); ++t) {
    METACODEC_CHECK(symbols[t] < cdfs[t].alphabet(), ErrorCode::kOutOfRange,
                    "symbol outside alphabet");
    encoder.Encode(cdfs[t].start(symbols[t]), cdfs[t].freq(symbols[t]));
  }
  return encoder.Finish();
}

std::vector<uint32_t> AcDecode(std::span<const uint8_t> bytes,
                               const CdfProvider& provider, size_t count) {
  RangeDecoder decoder(bytes);
  std::vector<uint32_t> symbols(count);
  for (size_t t = 0; t < count; ++t) {
    const CdfTable& table = provider(t);
    const uint32_t target = decoder.Target();
    auto it = std::upper_bound(table.cum.begin(), table.cum.end(), target);
    const size_t s = static_cast<size_t>(it - table.cum.begin()) - 1;
    METACODEC_CHECK(s < table.alphabet(), ErrorCode::kCorruptStream,
                    "decoded target outside table");
    decoder.Consume(table.start(s), table.freq(s));
    symbols[t] = static_cast<uint32_t>(s);
  }
  return symbols;
}

}  // namespace metacodec
