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

#ifndef METACODEC_PROB_MODEL_H_
#define METACODEC_PROB_MODEL_H_

// Multi-scale progressive probability model. The quantized latent is reduced
// to a nearest-neighbour pyramid; the coarsest level is coded uniformly and
// every finer level is coded in three phase groups, each conditioned on the
// coarser level, the groups already processed and a running context tensor.

#include <functional>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "metacodec/codec.h"
#include "metacodec/logistic_mixture.h"
#include "metacodec/pyramid.h"

namespace metacodec {

struct ProbModelConfig {
  int latent_channels = 8;
  int num_scales = 3;
  int mixtures = 5;
  int context_channels = 32;

  void Validate() const;
};

class ProbModelImpl : public torch::nn::Module {
 public:
  explicit ProbModelImpl(const ProbModelConfig& config);

  // z_hat: N x c x h x w (ground truth where available, upsampled coarser
  // level elsewhere); availability: N x 1 x h x w in {0,1};
  // context: N x Q x h x w. Returns N x c x h x w x K mixture parameters and
  // the context for the next step.
  std::pair<MixtureParams, torch::Tensor> PredictGroup(
      const torch::Tensor& z_hat, const torch::Tensor& availability,
      const torch::Tensor& context);

  const ProbModelConfig& config() const { return config_; }

 private:
  ProbModelConfig config_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Conv2d param_head_{nullptr};
  torch::nn::Conv2d context_head_{nullptr};
};
TORCH_MODULE(ProbModel);

// Called once per (scale, group) in coding order: scales from coarse to fine
// (scale = index of the coarser level), groups 0..2. `level` is the finer
// level being reconstructed; callbacks that decode write the group's values
// into it.
using StepCallback = std::function<void(int scale, int group,
                                        const torch::Tensor& group_mask,
                                        const MixtureParams& params,
                                        torch::Tensor& level)>;

// Drives the model over every step. `levels` must hold the dequantized
// pyramid; only levels.back() has to be known up front when
// `fill_anchors` is set (anchors of each finer level are then copied in
// place from the coarser one before its first group).
void RunProgressive(ProbModelImpl& model, std::vector<torch::Tensor>& levels,
                    bool fill_anchors, const StepCallback& on_step);

// Cross-entropy of z in bits, per image [N], including bits per element for
// the uniformly coded coarsest level. `latent_hat` carries the gradient path
// (normally the straight-through dequantized latent). When `group_bits` is
// given it receives the per-step terms in coding order.
torch::Tensor RateLoss(ProbModelImpl& model, const torch::Tensor& latent_hat,
                       const SymbolTensor& z,
                       std::vector<torch::Tensor>* group_bits = nullptr);

}  // namespace metacodec

#endif  // METACODEC_PROB_MODEL_H_
