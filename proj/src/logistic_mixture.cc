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

#include "metacodec/logistic_mixture.h"

#include "metacodec/error.h"

namespace metacodec {

torch::Tensor DiscretizedLogisticPmf(const MixtureParams& params,
                                     const torch::Tensor& symbols, int bits) {
  METACODEC_CHECK(bits >= 1 && bits <= 16, ErrorCode::kInvalidArgument,
                  "alphabet bits out of range");
  const int64_t top = (int64_t{1} << bits) - 1;
  METACODEC_CHECK(symbols.numel() == 0 || (symbols.min().item<int64_t>() >= 0 &&
                                           symbols.max().item<int64_t>() <= top),
                  ErrorCode::kOutOfRange, "symbol outside alphabet");
  auto value = symbols.to(params.means.scalar_type()) / static_cast<double>(top);
  return DiscretizedLogisticPmfAt(params, value, symbols, bits);
}

torch::Tensor DiscretizedLogisticPmfAt(const MixtureParams& params,
                                       const torch::Tensor& value,
                                       const torch::Tensor& symbols, int bits) {
  const int64_t top = (int64_t{1} << bits) - 1;
  const double half = 0.5 / static_cast<double>(top);
  auto inv_scale = torch::exp(-params.log_scales.clamp_min(kMinLogScale));
  auto centered = value.unsqueeze(-1) - params.means;
  auto hi = (centered + half) * inv_scale;
  auto lo = (centered - half) * inv_scale;
  auto sym = symbols.unsqueeze(-1);
  auto is_top = (sym == top);
  auto is_bottom = (sym == 0);
  // sigma(hi) - sigma(lo) loses precision when both are near 1; there the
  // equivalent sigma(-lo) - sigma(-hi) is used instead.
  auto upper = torch::where(is_top, torch::ones_like(hi), torch::sigmoid(hi));
  auto lower = torch::where(is_bottom, torch::zeros_like(lo), torch::sigmoid(lo));
  auto upper_c = torch::where(is_bottom, torch::ones_like(lo), torch::sigmoid(-lo));
  auto lower_c = torch::where(is_top, torch::zeros_like(hi), torch::sigmoid(-hi));
  auto mass = torch::where(centered > 0, upper_c - lower_c, upper - lower);
  return (params.weights() * mass).sum(-1);
}

torch::Tensor ApplyProbabilityFloor(const torch::Tensor& pmf, int bits) {
  const double alphabet = static_cast<double>(int64_t{1} << bits);
  return kProbabilityFloor + (1.0 - alphabet * kProbabilityFloor) * pmf;
}

torch::Tensor PmfTable(const MixtureParams& params, int bits) {
  const int64_t top = (int64_t{1} << bits) - 1;
  auto opts = params.means.options();
  // Interior bin edges (t + 0.5) / top for t = 0..top-1.
  auto edges = (torch::arange(top, opts) + 0.5) / static_cast<double>(top);
  auto inv_scale = torch::exp(-params.log_scales.clamp_min(kMinLogScale));
  auto args = (edges - params.means.unsqueeze(-1)) * inv_scale.unsqueeze(-1);
  auto cdf = (params.weights().unsqueeze(-1) * torch::sigmoid(args)).sum(-2);
  auto shape = cdf.sizes().vec();
  shape.back() = 1;
  auto full = torch::cat({torch::zeros(shape, opts), cdf, torch::ones(shape, opts)}, -1);
  auto pmf = (full.narrow(-1, 1, top + 1) - full.narrow(-1, 0, top + 1)).clamp_min(0.0);
  return ApplyProbabilityFloor(pmf, bits);
}

}  // namespace metacodec
