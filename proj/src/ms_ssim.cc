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

#include "metacodec/ms_ssim.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "metacodec/error.h"

namespace metacodec {

namespace F = torch::nn::functional;

namespace {

constexpr std::array<double, 5> kWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

torch::Tensor Gaussian1d(int size, const torch::TensorOptions& opts) {
  auto coords = torch::arange(size, opts) - (size - 1) / 2.0;
  auto g = torch::exp(-(coords * coords) / (2.0 * kSigma * kSigma));
  return g / g.sum();
}

// Separable depthwise valid filtering.
torch::Tensor Blur(const torch::Tensor& x, const torch::Tensor& g) {
  const int64_t c = x.size(1);
  const int64_t k = g.size(0);
  auto gh = g.view({1, 1, 1, k}).expand({c, 1, 1, k});
  auto gv = g.view({1, 1, k, 1}).expand({c, 1, k, 1});
  auto out = F::conv2d(x, gh, F::Conv2dFuncOptions().groups(c));
  return F::conv2d(out, gv, F::Conv2dFuncOptions().groups(c));
}

// Returns (ssim, contrast-structure), each [N].
std::pair<torch::Tensor, torch::Tensor> SsimTerms(const torch::Tensor& x,
                                                  const torch::Tensor& y) {
  const int64_t min_side = std::min(x.size(2), x.size(3));
  int size = static_cast<int>(std::min<int64_t>(kWindow, min_side));
  if (size % 2 == 0) --size;
  auto g = Gaussian1d(size, x.options());
  auto mu_x = Blur(x, g);
  auto mu_y = Blur(y, g);
  auto mu_xx = mu_x * mu_x, mu_yy = mu_y * mu_y, mu_xy = mu_x * mu_y;
  auto s_xx = Blur(x * x, g) - mu_xx;
  auto s_yy = Blur(y * y, g) - mu_yy;
  auto s_xy = Blur(x * y, g) - mu_xy;
  auto cs = (2.0 * s_xy + kC2) / (s_xx + s_yy + kC2);
  auto lum = (2.0 * mu_xy + kC1) / (mu_xx + mu_yy + kC1);
  return {(lum * cs).mean({1, 2, 3}), cs.mean({1, 2, 3})};
}

}  // namespace

int MsSsimScales(int64_t height, int64_t width) {
  int64_t side = std::min(height, width);
  int scales = 1;
  while (scales < 5 && side / 2 >= kWindow) {
    side /= 2;
    ++scales;
  }
  return scales;
}

torch::Tensor MsSsim(const torch::Tensor& x, const torch::Tensor& y) {
  METACODEC_CHECK(x.dim() == 4 && x.sizes() == y.sizes(), ErrorCode::kShapeMismatch,
                  "MS-SSIM inputs must be equal-shaped N x C x H x W");
  const int scales = MsSsimScales(x.size(2), x.size(3));
  double weight_sum = 0.0;
  for (int i = 0; i < scales; ++i) weight_sum += kWeights[i];
  // Fractional powers have an infinite slope at 0; a tiny positive floor
  // keeps gradients finite without moving the value.
  constexpr double kFloor = 1e-6;
  auto a = x, b = y;
  torch::Tensor result;
  for (int i = 0; i < scales; ++i) {
    auto [ssim, cs] = SsimTerms(a, b);
    const double w = kWeights[i] / weight_sum;
    auto term = (i + 1 == scales ? ssim : cs).clamp_min(kFloor).pow(w);
    result = result.defined() ? result * term : term;
    if (i + 1 < scales) {
      a = F::avg_pool2d(a, F::AvgPool2dFuncOptions(2).stride(2));
      b = F::avg_pool2d(b, F::AvgPool2dFuncOptions(2).stride(2));
    }
  }
  return result;
}

torch::Tensor RgbToLuma(const torch::Tensor& rgb) {
  METACODEC_CHECK(rgb.dim() == 4 && rgb.size(1) == 3, ErrorCode::kShapeMismatch,
                  "expected N x 3 x H x W");
  return 0.299 * rgb.narrow(1, 0, 1) + 0.587 * rgb.narrow(1, 1, 1) +
         0.114 * rgb.narrow(1, 2, 1);
}

}  // namespace metacodec
