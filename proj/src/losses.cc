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

#include "metacodec/losses.h"

#include "metacodec/codec.h"
#include "metacodec/error.h"
#include "metacodec/ms_ssim.h"

namespace metacodec {

void LossWeights::Validate() const {
  METACODEC_CHECK(ms_ssim >= 0 && mse >= 0 && perceptual >= 0 && rate >= 0 && importance >= 0,
                  ErrorCode::kInvalidArgument, "loss weights must be non-negative");
}

namespace {

torch::Tensor PerceptualTerm(const torch::Tensor& image, const torch::Tensor& recon,
                             PerceptualExtractor* extractor) {
  const double pixels = static_cast<double>(image.size(2) * image.size(3));
  auto fx = extractor->Features(image);
  auto fy = extractor->Features(recon);
  METACODEC_CHECK(fx.size() == fy.size(), ErrorCode::kShapeMismatch,
                  "perceptual extractor returned mismatched feature lists");
  auto total = torch::zeros({image.size(0)}, image.options());
  for (size_t i = 0; i < fx.size(); ++i) {
    total = total + (fx[i] - fy[i]).abs().flatten(1).sum(1) / pixels;
  }
  return total;
}

}  // namespace

RdTerms RdLoss(const RdInputs& in, const LossWeights& w, PerceptualExtractor* extractor) {
  METACODEC_CHECK(in.image.dim() == 4 && in.image.sizes() == in.recon.sizes(),
                  ErrorCode::kShapeMismatch, "image and reconstruction shapes differ");
  const int64_t n = in.image.size(0);
  const double pixels = static_cast<double>(in.image.size(2) * in.image.size(3));
  auto zeros = torch::zeros({n}, in.image.options());
  RdTerms t;
  t.ms_ssim = MsSsim(in.image, in.recon);
  t.mse = (in.recon - in.image).pow(2).mean({1, 2, 3});
  t.perceptual = (w.perceptual > 0 && extractor != nullptr)
                     ? PerceptualTerm(in.image, in.recon, extractor)
                     : zeros;
  t.bpp = in.rate_bits.defined() ? in.rate_bits / pixels : zeros;
  t.importance = in.tau.defined() ? ImportanceConstraint(in.tau, in.zeta) : zeros;
  t.total = -w.ms_ssim * t.ms_ssim + w.mse * t.mse + w.perceptual * t.perceptual +
            w.rate * t.bpp + w.importance * t.importance;
  return t;
}

torch::Tensor DistortionLoss(const torch::Tensor& image, const torch::Tensor& recon,
                             const LossWeights& weights, PerceptualExtractor* extractor) {
  RdInputs in{image, recon, {}, {}, 0.5};
  LossWeights d = weights;
  d.rate = 0.0;
  d.importance = 0.0;
  return RdLoss(in, d, extractor).total;
}

}  // namespace metacodec
