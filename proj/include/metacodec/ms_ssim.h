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

#ifndef METACODEC_MS_SSIM_H_
#define METACODEC_MS_SSIM_H_

#include <torch/torch.h>

namespace metacodec {

// Multi-scale SSIM with the standard five-scale weights, an 11x11 Gaussian
// window (sigma 1.5) and valid filtering. Images too small for five scales
// use as many scales as fit (coarsest side >= window) with the weights
// renormalized; images smaller than the window shrink the window.
//
// Inputs are N x C x H x W in [0,1]; SSIM is averaged over channels and the
// result has shape [N]. Per-scale terms are clamped to be non-negative, so the
// result lies in [0,1].
torch::Tensor MsSsim(const torch::Tensor& x, const torch::Tensor& y);

// Number of scales MsSsim uses for an h x w image.
int MsSsimScales(int64_t height, int64_t width);

// ITU-R BT.601 luma of an N x 3 x H x W RGB tensor, N x 1 x H x W.
torch::Tensor RgbToLuma(const torch::Tensor& rgb);

}  // namespace metacodec

#endif  // METACODEC_MS_SSIM_H_
