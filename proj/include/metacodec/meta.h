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

#ifndef METACODEC_META_H_
#define METACODEC_META_H_

// Latent overfitting and the meta-learning loop built around it.

#include <functional>
#include <vector>

#include <torch/torch.h>

#include "metacodec/model.h"
#include "metacodec/trainer.h"

namespace metacodec {

struct MetaConfig {
  int inner_iterations = 4;  // n
  double inner_lr = 0.1;     // alpha
  double outer_lr = 1e-4;    // beta
  bool second_order = true;
  int batch_size = 12;
  int epochs = 5;
  uint64_t seed = 0;

  void Validate() const;
};

enum class InnerGradient {
  kDetached,     // inference: the result carries no graph
  kFirstOrder,   // inner gradients are constants for the outer update
  kSecondOrder,  // the outer update differentiates through every step
};

using LatentObjective = std::function<torch::Tensor(const torch::Tensor& latent)>;

// Runs `steps` updates latent <- (latent - alpha * dL/dlatent) * mask. An
// undefined mask leaves the update unmasked. `trace` receives the objective
// value before each step.
torch::Tensor AdaptLatent(const LatentObjective& objective, torch::Tensor latent,
                          const torch::Tensor& mask, int steps, double alpha,
                          InnerGradient mode, std::vector<double>* trace = nullptr);

struct MetaTask {
  std::function<torch::Tensor()> initial_latent;
  LatentObjective inner_objective;
  LatentObjective outer_objective;
  std::function<torch::Tensor()> mask;  // optional
};

// Gradient of outer_objective(adapted latent) with respect to `params`.
// Parameters the objective does not touch receive zeros.
std::vector<torch::Tensor> MetaGradient(const MetaTask& task,
                                        const std::vector<torch::Tensor>& params, int steps,
                                        double alpha, bool second_order,
                                        double* outer_value = nullptr);

struct OverfitResult {
  torch::Tensor latent;        // adapted masked latent, no graph
  torch::Tensor tau;
  torch::Tensor mask;
  std::vector<double> trace;   // per-pixel RD loss, steps + 1 entries
};

// Inference-time overfitting of one image's masked latent; the networks
// are not modified. `init`, when defined, replaces E(x) * m as the start.
OverfitResult OverfitLatent(CodecModelImpl& model, const torch::Tensor& image, int steps,
                            double alpha, const LossWeights& weights, int bits,
                            const torch::Tensor& init = {});

struct MetaEpoch {
  int epoch = 0;
  double outer_loss = 0.0;
};

std::vector<MetaEpoch> MetaFinetune(CodecModel& model, const torch::Tensor& patches,
                                    const MetaConfig& config,
                                    const std::function<void(const MetaEpoch&)>& sink = {});

}  // namespace metacodec

#endif  // METACODEC_META_H_
