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

#ifndef METACODEC_AC_ABI_H_
#define METACODEC_AC_ABI_H_

/* Flat-buffer C interface to the arithmetic coder. This is the boundary an
 * alternative (native) coder implements; the tensor coder only talks to a
 * coder through an mc_ac_backend table.
 *
 * CDF buffers: `count` tables of `alphabet` uint16 starts each, laid out
 * contiguously. Table t holds cum[0..A-1] with cum[0] = 0, strictly
 * increasing; the end of the last symbol is implicitly 65536.
 *
 * Every function returns an mc_status value. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum mc_status {
  MC_OK = 0,
  MC_ERR_INVALID_ARGUMENT = 1,
  MC_ERR_SYMBOL_OUT_OF_RANGE = 3,
  MC_ERR_CORRUPT_STREAM = 14,
  MC_ERR_BAD_CDF = 100,
  MC_ERR_BUFFER_TOO_SMALL = 101,
  MC_ERR_STATE = 102,
  MC_ERR_INTERNAL = 255
};

typedef struct mc_ac_encoder mc_ac_encoder;
typedef struct mc_ac_decoder mc_ac_decoder;

int32_t mc_ac_encoder_new(mc_ac_encoder** out);
/* Appends `count` symbols, each coded with its own table. */
int32_t mc_ac_encoder_push(mc_ac_encoder* enc, const uint16_t* symbols,
                           const uint16_t* cdf_starts, size_t count,
                           uint32_t alphabet);
/* Terminates the stream. On MC_ERR_BUFFER_TOO_SMALL, *written holds the
 * required size and the call may be repeated with a larger buffer. */
int32_t mc_ac_encoder_finish(mc_ac_encoder* enc, uint8_t* out, size_t capacity,
                             size_t* written);
void mc_ac_encoder_free(mc_ac_encoder* enc);

/* The decoder borrows `bytes`; they must outlive it. */
int32_t mc_ac_decoder_new(const uint8_t* bytes, size_t length,
                          mc_ac_decoder** out);
int32_t mc_ac_decoder_pull(mc_ac_decoder* dec, const uint16_t* cdf_starts,
                           size_t count, uint32_t alphabet,
                           uint16_t* symbols_out);
void mc_ac_decoder_free(mc_ac_decoder* dec);

/* One-shot helpers. `cdf_starts` holds `count` tables of `alphabet` entries,
 * as for the streaming calls. */
int32_t mc_ac_encode(const uint16_t* symbols, size_t count,
                     const uint16_t* cdf_starts, uint32_t alphabet,
                     uint8_t* out, size_t capacity, size_t* written);
int32_t mc_ac_decode(const uint8_t* bytes, size_t length,
                     const uint16_t* cdf_starts, uint32_t alphabet,
                     size_t count, uint16_t* symbols_out);

typedef struct mc_ac_backend {
  const char* name;
  int32_t (*encoder_new)(mc_ac_encoder**);
  int32_t (*encoder_push)(mc_ac_encoder*, const uint16_t*, const uint16_t*,
                          size_t, uint32_t);
  int32_t (*encoder_finish)(mc_ac_encoder*, uint8_t*, size_t, size_t*);
  void (*encoder_free)(mc_ac_encoder*);
  int32_t (*decoder_new)(const uint8_t*, size_t, mc_ac_decoder**);
  int32_t (*decoder_pull)(mc_ac_decoder*, const uint16_t*, size_t, uint32_t,
                          uint16_t*);
  void (*decoder_free)(mc_ac_decoder*);
} mc_ac_backend;

const mc_ac_backend* mc_ac_reference_backend(void);

#ifdef __cplusplus
}  /* extern "C" */
#endif

#endif  /* METACODEC_AC_ABI_H_ */
