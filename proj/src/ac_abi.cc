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

#include "metacodec/ac_abi.h"

#include <cstring>
#include <new>
#include <span>
#include <vector>

#include "metacodec/error.h"
#include "metacodec/range_coder.h"

struct mc_ac_encoder {
  metacodec::RangeEncoder coder;
  bool finished = false;
  std::vector<uint8_t> bytes;
};

struct mc_ac_decoder {
  explicit mc_ac_decoder(std::span<const uint8_t> b) : coder(b) {}
  metacodec::RangeDecoder coder;
};

namespace {

int32_t StatusFor(const metacodec::Error& e) {
  switch (e.code()) {
    case metacodec::ErrorCode::kOutOfRange: return MC_ERR_SYMBOL_OUT_OF_RANGE;
    case metacodec::ErrorCode::kCorruptStream: return MC_ERR_CORRUPT_STREAM;
    default: return MC_ERR_INVALID_ARGUMENT;
  }
}

bool ValidTable(const uint16_t* starts, uint32_t alphabet) {
  if (starts[0] != 0) return false;
  for (uint32_t s = 1; s < alphabet; ++s) {
    if (starts[s] <= starts[s - 1]) return false;
  }
  return true;
}

template <typename Fn>
int32_t Guard(Fn&& fn) {
  try {
    return fn();
  } catch (const metacodec::Error& e) {
    return StatusFor(e);
  } catch (const std::bad_alloc&) {
    return MC_ERR_INTERNAL;
  } catch (...) {
    return MC_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

int32_t mc_ac_encoder_new(mc_ac_encoder** out) {
  if (out == nullptr) return MC_ERR_INVALID_ARGUMENT;
  return Guard([&] {
    *out = new mc_ac_encoder();
    return static_cast<int32_t>(MC_OK);
  });
}

int32_t mc_ac_encoder_push(mc_ac_encoder* enc, const uint16_t* symbols,
                           const uint16_t* cdf_starts, size_t count,
                           uint32_t alphabet) {
  if (enc == nullptr || alphabet == 0 || alphabet > metacodec::kProbabilityTotal ||
      (count > 0 && (symbols == nullptr || cdf_starts == nullptr))) {
    return MC_ERR_INVALID_ARGUMENT;
  }
  if (enc->finished) return MC_ERR_STATE;
  // Validate the whole batch first so a rejected call leaves the stream as is.
  for (size_t t = 0; t < count; ++t) {
    if (symbols[t] >= alphabet) return MC_ERR_SYMBOL_OUT_OF_RANGE;
    if (!ValidTable(cdf_starts + t * alphabet, alphabet)) return MC_ERR_BAD_CDF;
  }
  return Guard([&] {
    for (size_t t = 0; t < count; ++t) {
      const uint16_t* table = cdf_starts + t * alphabet;
      const uint32_t s = symbols[t];
      const uint32_t next = s + 1 < alphabet ? table[s + 1] : metacodec::kProbabilityTotal;
      enc->coder.Encode(table[s], next - table[s]);
    }
    return static_cast<int32_t>(MC_OK);
  });
}

int32_t mc_ac_encoder_finish(mc_ac_encoder* enc, uint8_t* out, size_t capacity,
                             size_t* written) {
  if (enc == nullptr || written == nullptr) return MC_ERR_INVALID_ARGUMENT;
  if (!enc->finished) {
    enc->bytes = enc->coder.Finish();
    enc->finished = true;
  }
  *written = enc->bytes.size();
  if (capacity < enc->bytes.size()) return MC_ERR_BUFFER_TOO_SMALL;
  if (!enc->bytes.empty()) {
    if (out == nullptr) return MC_ERR_INVALID_ARGUMENT;
    std::memcpy(out, enc->bytes.data(), enc->bytes.size());
  }
  return MC_OK;
}

void mc_ac_encoder_free(mc_ac_encoder* enc) { delete enc; }

int32_t mc_ac_decoder_new(const uint8_t* bytes, size_t length,
                          mc_ac_decoder** out) {
  if (out == nullptr || (length > 0 && bytes == nullptr)) {
    return MC_ERR_INVALID_ARGUMENT;
  }
  return Guard([&] {
    *out = new mc_ac_decoder(std::span<const uint8_t>(bytes, length));
    return static_cast<int32_t>(MC_OK);
  });
}

int32_t mc_ac_decoder_pull(mc_ac_decoder* dec, const uint16_t* cdf_starts,
                           size_t count, uint32_t alphabet,
                           uint16_t* symbols_out) {
  if (dec == nullptr || alphabet == 0 || alphabet > metacodec::kProbabilityTotal ||
      (count > 0 && (cdf_starts == nullptr || symbols_out == nullptr))) {
    return MC_ERR_INVALID_ARGUMENT;
  }
  for (size_t t = 0; t < count; ++t) {
    if (!ValidTable(cdf_starts + t * alphabet, alphabet)) return MC_ERR_BAD_CDF;
  }
  return Guard([&] {
    for (size_t t = 0; t < count; ++t) {
      std::span<const uint16_t> table(cdf_starts + t * alphabet, alphabet);
      symbols_out[t] = static_cast<uint16_t>(dec->coder.DecodeSymbol(table));
    }
    return static_cast<int32_t>(MC_OK);
  });
}

void mc_ac_decoder_free(mc_ac_decoder* dec) { delete dec; }

int32_t mc_ac_encode(const uint16_t* symbols, size_t count,
                     const uint16_t* cdf_starts, uint32_t alphabet,
                     uint8_t* out, size_t capacity, size_t* written) {
  mc_ac_encoder* enc = nullptr;
  int32_t status = mc_ac_encoder_new(&enc);
  if (status != MC_OK) return status;
  status = mc_ac_encoder_push(enc, symbols, cdf_starts, count, alphabet);
  if (status == MC_OK) status = mc_ac_encoder_finish(enc, out, capacity, written);
  mc_ac_encoder_free(enc);
  return status;
}

int32_t mc_ac_decode(const uint8_t* bytes, size_t length,
                     const uint16_t* cdf_starts, uint32_t alphabet,
                     size_t count, uint16_t* symbols_out) {
  mc_ac_decoder* dec = nullptr;
  int32_t status = mc_ac_decoder_new(bytes, length, &dec);
  if (status != MC_OK) return status;
  status = mc_ac_decoder_pull(dec, cdf_starts, count, alphabet, symbols_out);
  mc_ac_decoder_free(dec);
  return status;
}

const mc_ac_backend* mc_ac_reference_backend(void) {
  static const mc_ac_backend backend = {
      "reference",         mc_ac_encoder_new,  mc_ac_encoder_push,
      mc_ac_encoder_finish, mc_ac_encoder_free, mc_ac_decoder_new,
      mc_ac_decoder_pull,  mc_ac_decoder_free,
  };
  return &backend;
}

}  // extern "C"
