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

#ifndef METACODEC_CODEC_H_
#define METACODEC_CODEC_H_

// Codec core: analysis/synthesis networks, importance masking and the
// uniform scalar quantizer. All image and latent tensors are NCHW float
// tensors; images live in [0,1].

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace metacodec {

struct CodecConfig {
  int channels = 8;      // latent channels c
  int bits = 8;          // quantization bits b, 1..8
  int downsample = 4;    // encoder stride s, power of two
  int hidden = 32;       // convolution width
  double zeta = 0.5;     // target mean of the importance map

  void Validate() const;
  // Bits needed to serialize a quantized importance value (c+1 levels).
  int TauBits() const;
  int64_t Levels() const { return (int64_t{1} << bits) - 1; }
};

// Quantized latent symbols, int64 NCHW, each in [0, 2^bits - 1].
struct SymbolTensor {
  torch::Tensor symbols;
  int bits = 8;
};

struct ImportanceMap {
  torch::Tensor tau;    // N x 1 x h x w, in [0,1]
  torch::Tensor tau_q;  // tau rounded onto the grid {k/c}
};

// Binary prefix mask over channels, float N x c x h x w.
struct ChannelMask {
  torch::Tensor m;
};

struct PadRecord {
  int64_t height = 0;
  int64_t width = 0;
};

// floor(v + 0.5): ties go away from zero for the non-negative values the
// codec rounds. Used everywhere a value is snapped to an integer grid.
torch::Tensor RoundHalfAway(const torch::Tensor& v);

torch::Tensor QuantizeTau(const torch::Tensor& tau, int channels);

// m[k] = 1 iff k < c * tau_q (k zero-based). Hard, no gradient.
ChannelMask ExpandMask(const torch::Tensor& tau_q, int channels);

// Same forward value as ExpandMask(QuantizeTau(tau)); the backward pass uses
// the relaxation clamp(c*tau - k, 0, 1) so the importance net receives
// gradients from the rate and distortion terms.
torch::Tensor ExpandMaskStraightThrough(const torch::Tensor& tau, int channels);

torch::Tensor ApplyMask(const torch::Tensor& latent, const ChannelMask& mask);

// |mean(tau) - zeta| per image, shape [N].
torch::Tensor ImportanceConstraint(const torch::Tensor& tau, double zeta);

SymbolTensor Quantize(const torch::Tensor& latent, int bits);
torch::Tensor Dequantize(const SymbolTensor& z);
// Forward: Dequantize(Quantize(latent)). Backward: identity.
torch::Tensor QuantizeStraightThrough(const torch::Tensor& latent, int bits);

// Replicate-pads bottom/right up to multiples of `multiple`.
std::pair<torch::Tensor, PadRecord> PadImage(const torch::Tensor& image,
                                             int multiple);
torch::Tensor CropImage(const torch::Tensor& image, const PadRecord& record);

// Where each decoder conv layer's bias sits inside the flat bias vector.
struct BiasSlot {
  std::string name;
  int64_t offset = 0;
  int64_t length = 0;
};
using BiasLayout = std::vector<BiasSlot>;

// Strided conv analysis network ending in a sigmoid. Used for both the
// latent encoder (out = c) and the importance network (out = 1).
class AnalysisNetImpl : public torch::nn::Module {
 public:
  AnalysisNetImpl(int out_channels, int hidden, int downsample);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(AnalysisNet);

class DecoderNetImpl : public torch::nn::Module {
 public:
  DecoderNetImpl(int latent_channels, int hidden, int downsample);

  // `biases`, when defined, replaces every conv bias (flat, in layout order).
  // Gradients flow into it; the module's own parameters are untouched.
  torch::Tensor forward(const torch::Tensor& latent,
                        const torch::Tensor& biases = {});

  const BiasLayout& bias_layout() const { return layout_; }
  int64_t bias_count() const;
  // Flat copy of the current conv biases.
  torch::Tensor DefaultBiases() const;

 private:
  std::vector<torch::nn::Conv2d> convs_;
  std::vector<bool> upsample_before_;
  BiasLayout layout_;
};
TORCH_MODULE(DecoderNet);

}  // namespace metacodec

#endif  // METACODEC_CODEC_H_
