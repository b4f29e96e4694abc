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

#ifndef METACODEC_LOSSES_H_
#define METACODEC_LOSSES_H_

#include <memory>
#include <vector>

#include <torch/torch.h>

namespace metacodec {

struct LossWeights {
  double ms_ssim = 1.0;     // lambda_d1, multiplies -MS-SSIM
  double mse = 10.0;        // lambda_d2
  double perceptual = 0.0;  // lambda_d3
  double rate = 0.01;       // lambda_r, multiplies bits per pixel
  double importance = 1.0;  // lambda_m

  void Validate() const;
};

// Feature extractor for the perceptual term. The term is the sum over the
// returned feature maps of the l1 distance, divided by the pixel count.
class PerceptualExtractor {
 public:
  virtual ~PerceptualExtractor() = default;
  virtual std::vector<torch::Tensor> Features(const torch::Tensor& image) = 0;
};

// Per-image loss terms, each [N]. `total` is the weighted sum, normalized
// per pixel: rate enters as bits per pixel.
struct RdTerms {
  torch::Tensor total;
  torch::Tensor ms_ssim;
  torch::Tensor mse;
  torch::Tensor perceptual;
  torch::Tensor bpp;
  torch::Tensor importance;
};

struct RdInputs {
  torch::Tensor image;        // N x 3 x H x W
  torch::Tensor recon;        // N x 3 x H x W
  torch::Tensor rate_bits;    // [N]; undefined means zero rate
  torch::Tensor tau;          // N x 1 x h x w; undefined means no constraint
  double zeta = 0.5;
};

RdTerms RdLoss(const RdInputs& in, const LossWeights& weights,
               PerceptualExtractor* extractor = nullptr);

// Distortion part only (MS-SSIM, MSE, perceptual), per image.
torch::Tensor DistortionLoss(const torch::Tensor& image, const torch::Tensor& recon,
                             const LossWeights& weights,
                             PerceptualExtractor* extractor = nullptr);

}  // namespace metacodec

#endif  // METACODEC_LOSSES_H_
