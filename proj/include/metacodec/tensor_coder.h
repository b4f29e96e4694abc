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

#ifndef METACODEC_TENSOR_CODER_H_
#define METACODEC_TENSOR_CODER_H_

// Entropy coding of a quantized latent with the progressive model.
//
// Coding order: the coarsest pyramid level with a uniform distribution, then
// every finer level from coarse to fine, groups in partition order, raster
// order inside a group, channels innermost.

#include <cstdint>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "metacodec/ac_abi.h"
#include "metacodec/codec.h"
#include "metacodec/prob_model.h"

namespace metacodec {

struct EncodedTensor {
  std::vector<uint8_t> payload;
  uint32_t checksum = 0;
};

// CRC-32 of the symbols in C x H x W order, one byte per symbol.
uint32_t SymbolChecksum(const torch::Tensor& symbols);

// z must be a single image (1 x c x h x w). `backend` defaults to the
// reference coder.
EncodedTensor EncodeTensor(ProbModelImpl& model, const SymbolTensor& z,
                           const mc_ac_backend* backend = nullptr);

// Inverse of EncodeTensor; throws kChecksumMismatch when the reconstructed
// symbols do not hash to `checksum` (model/weights divergence, truncation).
SymbolTensor DecodeTensor(ProbModelImpl& model, std::span<const uint8_t> payload,
                          uint32_t checksum, int64_t height, int64_t width,
                          int bits, const mc_ac_backend* backend = nullptr);

// Ideal code length of z on the coding path, in bits. With
// `quantized_cdf` the 16-bit tables are used instead of the float pmfs.
double CodingPathBits(ProbModelImpl& model, const SymbolTensor& z,
                      bool quantized_cdf);

}  // namespace metacodec

#endif  // METACODEC_TENSOR_CODER_H_
