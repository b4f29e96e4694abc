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

#include "metacodec/codec.h"

#include <bit>
#include <cmath>
#include <string>

#include "metacodec/error.h"

namespace metacodec {

namespace F = torch::nn::functional;

void CodecConfig::Validate() const {
  METACODEC_CHECK(channels >= 1 && channels <= 255, ErrorCode::kInvalidArgument,
                  "latent channels must be in [1,255]");
  METACODEC_CHECK(bits >= 1 && bits <= 8, ErrorCode::kInvalidArgument,
                  "quantization bits must be in [1,8]");
  METACODEC_CHECK(downsample >= 1 && std::has_single_bit(
                      static_cast<unsigned>(downsample)),
                  ErrorCode::kInvalidArgument,
                  "downsample factor must be a power of two");
  METACODEC_CHECK(hidden >= 1, ErrorCode::kInvalidArgument,
                  "hidden width must be positive");
  METACODEC_CHECK(zeta > 0.0 && zeta <= 1.0, ErrorCode::kInvalidArgument,
                  "zeta must be in (0,1]");
}

int CodecConfig::TauBits() const {
  return std::bit_width(static_cast<unsigned>(channels));
}

torch::Tensor RoundHalfAway(const torch::Tensor& v) {
  return torch::floor(v + 0.5);
}

torch::Tensor QuantizeTau(const torch::Tensor& tau, int channels) {
  return RoundHalfAway(tau.clamp(0.0, 1.0) * channels) / channels;
}

ChannelMask ExpandMask(const torch::Tensor& tau_q, int channels) {
  METACODEC_CHECK(tau_q.dim() == 4 && tau_q.size(1) == 1,
                  ErrorCode::kShapeMismatch, "tau must be N x 1 x h x w");
  torch::NoGradGuard no_grad;
  // Values that sit on the 1/c grid up to float error are snapped so that
  // c * (r/c) compares exactly against the channel index.
  auto scaled = tau_q.detach() * channels;
  auto snapped = RoundHalfAway(scaled);
  scaled = torch::where((scaled - snapped).abs() < 1e-4, snapped, scaled);
  auto k = torch::arange(channels, tau_q.options()).view({1, channels, 1, 1});
  return {(k < scaled).to(tau_q.scalar_type())};
}

torch::Tensor ExpandMaskStraightThrough(const torch::Tensor& tau, int channels) {
  auto hard = ExpandMask(QuantizeTau(tau.detach(), channels), channels).m;
  auto k = torch::arange(channels, tau.options()).view({1, channels, 1, 1});
  auto soft = (tau * channels - k).clamp(0.0, 1.0);
  return hard + (soft - soft.detach());
}

torch::Tensor ApplyMask(const torch::Tensor& latent, const ChannelMask& mask) {
  METACODEC_CHECK(latent.sizes() == mask.m.sizes(), ErrorCode::kShapeMismatch,
                  "latent and mask shapes differ");
  return latent * mask.m;
}

torch::Tensor ImportanceConstraint(const torch::Tensor& tau, double zeta) {
  return (tau.mean({1, 2, 3}) - zeta).abs();
}

SymbolTensor Quantize(const torch::Tensor& latent, int bits) {
  METACODEC_CHECK(bits >= 1 && bits <= 8, ErrorCode::kInvalidArgument,
                  "quantization bits must be in [1,8]");
  torch::NoGradGuard no_grad;
  const double levels = static_cast<double>((1 << bits) - 1);
  auto symbols = RoundHalfAway(latent.detach().clamp(0.0, 1.0) * levels);
  return {symbols.to(torch::kLong), bits};
}

torch::Tensor Dequantize(const SymbolTensor& z) {
  const int64_t levels = (int64_t{1} << z.bits) - 1;
  METACODEC_CHECK(z.symbols.numel() == 0 ||
                      (z.symbols.min().item<int64_t>() >= 0 &&
                       z.symbols.max().item<int64_t>() <= levels),
                  ErrorCode::kOutOfRange, "symbol outside quantizer range");
  return z.symbols.to(torch::kFloat) / static_cast<double>(levels);
}

torch::Tensor QuantizeStraightThrough(const torch::Tensor& latent, int bits) {
  const double levels = static_cast<double>((1 << bits) - 1);
  auto snapped =
      RoundHalfAway(latent.detach().clamp(0.0, 1.0) * levels) / levels;
  return snapped + (latent - latent.detach());
}

std::pair<torch::Tensor, PadRecord> PadImage(const torch::Tensor& image,
                                             int multiple) {
  METACODEC_CHECK(image.dim() == 4, ErrorCode::kShapeMismatch,
                  "image must be N x C x H x W");
  PadRecord record{image.size(2), image.size(3)};
  const int64_t pad_h = (multiple - record.height % multiple) % multiple;
  const int64_t pad_w = (multiple - record.width % multiple) % multiple;
  if (pad_h == 0 && pad_w == 0) return {image, record};
  // Replicate padding needs at least one real row/column, always present.
  auto padded = F::pad(image, F::PadFuncOptions({0, pad_w, 0, pad_h})
                                  .mode(torch::kReplicate));
  return {padded, record};
}

torch::Tensor CropImage(const torch::Tensor& image, const PadRecord& record) {
  using torch::indexing::Slice;
  return image.index({Slice(), Slice(), Slice(0, record.height),
                      Slice(0, record.width)});
}

namespace {

int Log2(int v) { return std::countr_zero(static_cast<unsigned>(v)); }

torch::nn::Conv2d Conv(int in, int out, int kernel, int stride) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel)
                               .stride(stride)
                               .padding(kernel / 2));
}

torch::nn::LeakyReLU Leaky() {
  return torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2));
}

}  // namespace

AnalysisNetImpl::AnalysisNetImpl(int out_channels, int hidden, int downsample) {
  torch::nn::Sequential seq;
  int in = 3;
  const int levels = Log2(downsample);
  for (int i = 0; i < levels; ++i) {
    seq->push_back(Conv(in, hidden, 3, 2));
    seq->push_back(Leaky());
    seq->push_back(Conv(hidden, hidden, 3, 1));
    seq->push_back(Leaky());
    in = hidden;
  }
  if (levels == 0) {
    seq->push_back(Conv(in, hidden, 3, 1));
    seq->push_back(Leaky());
  }
  seq->push_back(Conv(hidden, out_channels, 1, 1));
  seq->push_back(torch::nn::Sigmoid());
  body_ = register_module("body", seq);
}

torch::Tensor AnalysisNetImpl::forward(const torch::Tensor& x) {
  return body_->forward(x);
}

DecoderNetImpl::DecoderNetImpl(int latent_channels, int hidden,
                               int downsample) {
  auto add = [&](int in, int out, bool upsample) {
    const std::string name = "conv" + std::to_string(convs_.size());
    convs_.push_back(register_module(name, Conv(in, out, 3, 1)));
    upsample_before_.push_back(upsample);
  };
  add(latent_channels, hidden, false);
  for (int i = 0; i < Log2(downsample); ++i) {
    add(hidden, hidden, true);
    add(hidden, hidden, false);
  }
  add(hidden, 3, false);

  int64_t offset = 0;
  for (size_t i = 0; i < convs_.size(); ++i) {
    const int64_t len = convs_[i]->bias.numel();
    layout_.push_back({"conv" + std::to_string(i) + ".bias", offset, len});
    offset += len;
  }
}

int64_t DecoderNetImpl::bias_count() const {
  return layout_.empty() ? 0 : layout_.back().offset + layout_.back().length;
}

torch::Tensor DecoderNetImpl::DefaultBiases() const {
  std::vector<torch::Tensor> parts;
  for (const auto& conv : convs_) parts.push_back(conv->bias.detach());
  return torch::cat(parts).clone();
}

torch::Tensor DecoderNetImpl::forward(const torch::Tensor& latent,
                                      const torch::Tensor& biases) {
  if (biases.defined()) {
    METACODEC_CHECK(biases.dim() == 1 && biases.size(0) == bias_count(),
                    ErrorCode::kShapeMismatch,
                    "bias vector does not match decoder layout");
  }
  auto x = latent;
  const size_t last = convs_.size() - 1;
  for (size_t i = 0; i < convs_.size(); ++i) {
    if (upsample_before_[i]) {
      x = F::interpolate(x, F::InterpolateFuncOptions()
                                .scale_factor(std::vector<double>{2.0, 2.0})
                                .mode(torch::kNearest));
    }
    const auto& conv = convs_[i];
    auto bias = biases.defined()
                    ? biases.narrow(0, layout_[i].offset, layout_[i].length)
                    : conv->bias;
    x = F::conv2d(x, conv->weight,
                  F::Conv2dFuncOptions().bias(bias).padding(1));
    x = i == last ? torch::sigmoid(x) : F::leaky_relu(x, F::LeakyReLUFuncOptions()
                                                              .negative_slope(0.2));
  }
  return x;
}

}  // namespace metacodec
