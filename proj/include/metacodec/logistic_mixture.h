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

#ifndef METACODEC_LOGISTIC_MIXTURE_H_
#define METACODEC_LOGISTIC_MIXTURE_H_

// Discretized mixture-of-logistics likelihood over the quantizer grid
// {0, 1/(2^b-1), ..., 1}. Edge bins extend to +-infinity.

#include <torch/torch.h>

namespace metacodec {

// Every symbol keeps at least this much mass: p' = f + (1 - A f) p.
constexpr double kProbabilityFloor = 1.0 / 65536.0;
constexpr double kMinLogScale = -7.0;

// Trailing dimension is the mixture index.
struct MixtureParams {
  torch::Tensor logits;
  torch::Tensor means;
  torch::Tensor log_scales;

  torch::Tensor weights() const { return torch::softmax(logits, -1); }
  int64_t mixtures() const { return logits.size(-1); }
};

// Raw (unfloored) pmf of integer `symbols`; params have one extra trailing
// K dimension relative to `symbols`.
torch::Tensor DiscretizedLogisticPmf(const MixtureParams& params,
                                     const torch::Tensor& symbols, int bits);

// Same, but the bin centre is the real tensor `value` (normally the
// straight-through dequantized symbol) so gradients reach the latent.
// `symbols` only decides which bins are edge bins.
torch::Tensor DiscretizedLogisticPmfAt(const MixtureParams& params,
                                       const torch::Tensor& value,
                                       const torch::Tensor& symbols, int bits);

torch::Tensor ApplyProbabilityFloor(const torch::Tensor& pmf, int bits);

// Floored pmf over the full alphabet: [..., 2^bits].
torch::Tensor PmfTable(const MixtureParams& params, int bits);

}  // namespace metacodec

#endif  // METACODEC_LOGISTIC_MIXTURE_H_
