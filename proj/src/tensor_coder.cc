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

#include "metacodec/tensor_coder.h"

#include <zlib.h>

#include <cmath>
#include <memory>
#include <string>

#include "metacodec/error.h"
#include "metacodec/range_coder.h"

namespace metacodec {

using torch::indexing::Slice;

namespace {

void CheckStatus(int32_t status, const char* what) {
  if (status == MC_OK) return;
  const ErrorCode code = status == MC_ERR_CORRUPT_STREAM ? ErrorCode::kCorruptStream
                         : status == MC_ERR_SYMBOL_OUT_OF_RANGE ? ErrorCode::kOutOfRange
                                                                : ErrorCode::kInvalidArgument;
  throw Error(code, std::string(what) + " failed with status " + std::to_string(status));
}

torch::ScalarType ModelDtype(ProbModelImpl& model) {
  return model.parameters().front().scalar_type();
}

torch::Tensor ValuesOf(const torch::Tensor& symbols, int bits, torch::ScalarType dtype) {
  return Dequantize({symbols, bits}).to(dtype);
}

std::vector<uint16_t> UniformStarts(int bits) {
  const uint32_t alphabet = uint32_t{1} << bits;
  std::vector<uint16_t> starts(alphabet);
  for (uint32_t s = 0; s < alphabet; ++s) {
    starts[s] = static_cast<uint16_t>(s * (kProbabilityTotal / alphabet));
  }
  return starts;
}

// Group parameters flattened to (position, channel) order: [P * c, K].
MixtureParams GatherGroup(const MixtureParams& params, const torch::Tensor& mask) {
  auto pick = [&](const torch::Tensor& t) {
    auto g = t[0].index({Slice(), mask}).permute({1, 0, 2});
    return g.reshape({-1, g.size(2)}).to(torch::kDouble);
  };
  return {pick(params.logits), pick(params.means), pick(params.log_scales)};
}

std::vector<uint16_t> GroupStarts(const MixtureParams& group, int bits) {
  auto table = PmfTable(group, bits).contiguous();
  const int64_t rows = table.size(0), alphabet = table.size(1);
  std::vector<uint16_t> starts(static_cast<size_t>(rows * alphabet));
  const double* p = table.data_ptr<double>();
  for (int64_t r = 0; r < rows; ++r) {
    QuantizeCdfInto(std::span<const double>(p + r * alphabet, alphabet),
                    std::span<uint16_t>(starts.data() + r * alphabet, alphabet));
  }
  return starts;
}

// Symbols of level[0] at the group's positions, position-major.
std::vector<uint16_t> GroupSymbols(const torch::Tensor& level, const torch::Tensor& mask) {
  auto g = level[0].index({Slice(), mask}).t().contiguous().to(torch::kLong);
  std::vector<uint16_t> out(static_cast<size_t>(g.numel()));
  const int64_t* p = g.data_ptr<int64_t>();
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<uint16_t>(p[i]);
  return out;
}

std::vector<uint16_t> RasterSymbols(const torch::Tensor& level) {
  auto g = level[0].permute({1, 2, 0}).contiguous().to(torch::kLong);
  std::vector<uint16_t> out(static_cast<size_t>(g.numel()));
  const int64_t* p = g.data_ptr<int64_t>();
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<uint16_t>(p[i]);
  return out;
}

torch::Tensor ToLongTensor(const std::vector<uint16_t>& v) {
  auto t = torch::empty({static_cast<int64_t>(v.size())}, torch::kLong);
  int64_t* p = t.data_ptr<int64_t>();
  for (size_t i = 0; i < v.size(); ++i) p[i] = v[i];
  return t;
}

struct EncoderHandle {
  const mc_ac_backend* backend;
  mc_ac_encoder* enc = nullptr;
  ~EncoderHandle() {
    if (enc) backend->encoder_free(enc);
  }
};

struct DecoderHandle {
  const mc_ac_backend* backend;
  mc_ac_decoder* dec = nullptr;
  ~DecoderHandle() {
    if (dec) backend->decoder_free(dec);
  }
};

void CheckSingleImage(const SymbolTensor& z, int channels) {
  METACODEC_CHECK(z.symbols.dim() == 4 && z.symbols.size(0) == 1 &&
                      z.symbols.size(1) == channels,
                  ErrorCode::kShapeMismatch, "tensor coder expects 1 x c x h x w symbols");
  METACODEC_CHECK(z.bits >= 1 && z.bits <= 8, ErrorCode::kInvalidArgument,
                  "symbol bits must be in [1,8]");
}

}  // namespace

uint32_t SymbolChecksum(const torch::Tensor& symbols) {
  auto bytes = symbols.reshape({-1}).to(torch::kUInt8).contiguous();
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data_ptr<uint8_t>(), static_cast<uInt>(bytes.numel()));
  return static_cast<uint32_t>(crc);
}

EncodedTensor EncodeTensor(ProbModelImpl& model, const SymbolTensor& z,
                           const mc_ac_backend* backend) {
  CheckSingleImage(z, model.config().latent_channels);
  if (backend == nullptr) backend = mc_ac_reference_backend();
  torch::NoGradGuard no_grad;
  const auto dtype = ModelDtype(model);
  const int num_scales = model.config().num_scales;
  auto symbols = BuildPyramid(z.symbols, num_scales);
  auto values = BuildPyramid(ValuesOf(z.symbols, z.bits, dtype), num_scales);
  const uint32_t alphabet = uint32_t{1} << z.bits;

  EncoderHandle handle{backend};
  CheckStatus(backend->encoder_new(&handle.enc), "encoder_new");
  {
    auto top = RasterSymbols(symbols.levels.back());
    auto uniform = UniformStarts(z.bits);
    std::vector<uint16_t> starts;
    starts.reserve(top.size() * alphabet);
    for (size_t i = 0; i < top.size(); ++i) starts.insert(starts.end(), uniform.begin(), uniform.end());
    CheckStatus(backend->encoder_push(handle.enc, top.data(), starts.data(), top.size(), alphabet),
                "encoder_push");
  }
  RunProgressive(model, values.levels, false,
                 [&](int scale, int, const torch::Tensor& mask, const MixtureParams& params,
                     torch::Tensor&) {
                   if (!mask.any().item<bool>()) return;
                   auto starts = GroupStarts(GatherGroup(params, mask), z.bits);
                   auto syms = GroupSymbols(symbols.levels[scale - 1], mask);
                   CheckStatus(backend->encoder_push(handle.enc, syms.data(), starts.data(),
                                                     syms.size(), alphabet),
                               "encoder_push");
                 });
  EncodedTensor out;
  size_t written = 0;
  int32_t status = backend->encoder_finish(handle.enc, nullptr, 0, &written);
  if (status == MC_ERR_BUFFER_TOO_SMALL) {
    out.payload.resize(written);
    status = backend->encoder_finish(handle.enc, out.payload.data(), out.payload.size(), &written);
  }
  CheckStatus(status, "encoder_finish");
  out.payload.resize(written);
  out.checksum = SymbolChecksum(z.symbols);
  return out;
}

SymbolTensor DecodeTensor(ProbModelImpl& model, std::span<const uint8_t> payload,
                          uint32_t checksum, int64_t height, int64_t width, int bits,
                          const mc_ac_backend* backend) {
  METACODEC_CHECK(bits >= 1 && bits <= 8, ErrorCode::kInvalidArgument,
                  "symbol bits must be in [1,8]");
  METACODEC_CHECK(height >= 1 && width >= 1, ErrorCode::kShapeMismatch,
                  "latent must be non-empty");
  if (backend == nullptr) backend = mc_ac_reference_backend();
  torch::NoGradGuard no_grad;
  const auto dtype = ModelDtype(model);
  const int num_scales = model.config().num_scales;
  const int64_t channels = model.config().latent_channels;
  const uint32_t alphabet = uint32_t{1} << bits;

  std::vector<torch::Tensor> symbols, values;
  for (int i = 0; i <= num_scales; ++i) {
    auto [h, w] = LevelDims(height, width, i);
    symbols.push_back(torch::zeros({1, channels, h, w}, torch::kLong));
    values.push_back(torch::zeros({1, channels, h, w}, dtype));
  }

  DecoderHandle handle{backend};
  CheckStatus(backend->decoder_new(payload.data(), payload.size(), &handle.dec), "decoder_new");
  {
    auto& top = symbols.back();
    const int64_t count = top.numel();
    auto uniform = UniformStarts(bits);
    std::vector<uint16_t> starts;
    starts.reserve(static_cast<size_t>(count) * alphabet);
    for (int64_t i = 0; i < count; ++i) starts.insert(starts.end(), uniform.begin(), uniform.end());
    std::vector<uint16_t> decoded(static_cast<size_t>(count));
    CheckStatus(backend->decoder_pull(handle.dec, starts.data(), decoded.size(), alphabet,
                                      decoded.data()),
                "decoder_pull");
    auto t = ToLongTensor(decoded);
    top = t.view({top.size(2), top.size(3), channels}).permute({2, 0, 1}).unsqueeze(0).contiguous();
    values.back() = ValuesOf(top, bits, dtype).contiguous();
  }
  RunProgressive(model, values, true,
                 [&](int scale, int group, const torch::Tensor& mask, const MixtureParams& params,
                     torch::Tensor& level) {
                   auto& sym = symbols[scale - 1];
                   if (group == 0) {
                     sym.index_put_({Slice(), Slice(), Slice(torch::indexing::None, torch::indexing::None, 2),
                                     Slice(torch::indexing::None, torch::indexing::None, 2)},
                                    symbols[scale]);
                   }
                   if (!mask.any().item<bool>()) return;
                   auto starts = GroupStarts(GatherGroup(params, mask), bits);
                   const size_t count = starts.size() / alphabet;
                   std::vector<uint16_t> decoded(count);
                   CheckStatus(backend->decoder_pull(handle.dec, starts.data(), count, alphabet,
                                                     decoded.data()),
                               "decoder_pull");
                   auto t = ToLongTensor(decoded).view({-1, channels}).t();
                   sym[0].index_put_({Slice(), mask}, t);
                   level[0].index_put_({Slice(), mask}, ValuesOf(t, bits, dtype));
                 });
  SymbolTensor z{symbols.front(), bits};
  METACODEC_CHECK(SymbolChecksum(z.symbols) == checksum, ErrorCode::kChecksumMismatch,
                  "decoded symbols fail the payload checksum");
  return z;
}

double CodingPathBits(ProbModelImpl& model, const SymbolTensor& z, bool quantized_cdf) {
  CheckSingleImage(z, model.config().latent_channels);
  torch::NoGradGuard no_grad;
  const auto dtype = ModelDtype(model);
  const int num_scales = model.config().num_scales;
  auto symbols = BuildPyramid(z.symbols, num_scales);
  auto values = BuildPyramid(ValuesOf(z.symbols, z.bits, dtype), num_scales);
  double total = static_cast<double>(z.bits) * static_cast<double>(symbols.levels.back().numel());
  const int64_t alphabet = int64_t{1} << z.bits;
  RunProgressive(model, values.levels, false,
                 [&](int scale, int, const torch::Tensor& mask, const MixtureParams& params,
                     torch::Tensor&) {
                   if (!mask.any().item<bool>()) return;
                   auto group = GatherGroup(params, mask);
                   auto syms = GroupSymbols(symbols.levels[scale - 1], mask);
                   if (quantized_cdf) {
                     auto starts = GroupStarts(group, z.bits);
                     for (size_t i = 0; i < syms.size(); ++i) {
                       const uint16_t* row = starts.data() + i * alphabet;
                       const uint32_t s = syms[i];
                       const uint32_t next = s + 1 < alphabet ? row[s + 1] : kProbabilityTotal;
                       total -= std::log2(static_cast<double>(next - row[s]) / kProbabilityTotal);
                     }
                   } else {
                     auto table = PmfTable(group, z.bits).contiguous();
                     const double* p = table.data_ptr<double>();
                     for (size_t i = 0; i < syms.size(); ++i) total -= std::log2(p[i * alphabet + syms[i]]);
                   }
                 });
  return total;
}

}  // namespace metacodec
