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

#include "metacodec/meta.h"

#include <algorithm>
#include <cmath>

#include "metacodec/error.h"

namespace metacodec {

void MetaConfig::Validate() const {
  METACODEC_CHECK(inner_iterations >= 1, ErrorCode::kInvalidArgument,
                  "inner iteration count must be at least 1");
  METACODEC_CHECK(inner_lr > 0, ErrorCode::kInvalidArgument, "inner learning rate must be positive");
  // A zero outer rate is accepted and leaves the networks unchanged.
  METACODEC_CHECK(outer_lr >= 0, ErrorCode::kInvalidArgument,
                  "outer learning rate must be non-negative");
  METACODEC_CHECK(batch_size > 0, ErrorCode::kInvalidArgument, "batch size must be positive");
  METACODEC_CHECK(epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be non-negative");
}

torch::Tensor AdaptLatent(const LatentObjective& objective, torch::Tensor latent,
                          const torch::Tensor& mask, int steps, double alpha,
                          InnerGradient mode, std::vector<double>* trace) {
  METACODEC_CHECK(steps >= 0, ErrorCode::kInvalidArgument, "step count must be non-negative");
  torch::AutoGradMode enable_grad(true);
  if (mode == InnerGradient::kDetached) {
    latent = latent.detach();
  }
  for (int k = 0; k < steps; ++k) {
    torch::Tensor x = latent;
    if (!x.requires_grad()) x = x.detach().requires_grad_(true);
    auto loss = objective(x);
    if (trace) trace->push_back(loss.item<double>());
    const bool create = mode == InnerGradient::kSecondOrder;
    auto g = torch::autograd::grad({loss}, {x}, {}, /*retain_graph=*/mode != InnerGradient::kDetached,
                                   /*create_graph=*/create)[0];
    if (mode == InnerGradient::kDetached) {
      torch::NoGradGuard no_grad;
      latent = x.detach() - alpha * g;
      if (mask.defined()) latent = latent * mask.detach();
    } else {
      latent = x - alpha * g;
      if (mask.defined()) latent = latent * mask;
    }
  }
  return latent;
}

std::vector<torch::Tensor> MetaGradient(const MetaTask& task,
                                        const std::vector<torch::Tensor>& params, int steps,
                                        double alpha, bool second_order, double* outer_value) {
  auto y0 = task.initial_latent();
  torch::Tensor mask = task.mask ? task.mask() : torch::Tensor();
  auto yn = AdaptLatent(task.inner_objective, y0, mask, steps, alpha,
                        second_order ? InnerGradient::kSecondOrder : InnerGradient::kFirstOrder);
  auto outer = task.outer_objective(yn);
  if (outer_value) *outer_value = outer.item<double>();
  auto grads = torch::autograd::grad({outer}, params, {}, /*retain_graph=*/false,
                                     /*create_graph=*/false, /*allow_unused=*/true);
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].defined()) grads[i] = torch::zeros_like(params[i]);
  }
  return grads;
}

OverfitResult OverfitLatent(CodecModelImpl& model, const torch::Tensor& image, int steps,
                            double alpha, const LossWeights& weights, int bits,
                            const torch::Tensor& init) {
  OverfitResult r;
  {
    torch::NoGradGuard no_grad;
    auto a = Analyze(model, image);
    r.tau = a.tau;
    r.mask = a.mask;
    r.latent = init.defined() ? init.detach() : a.masked;
  }
  auto per_pixel = [&](const torch::Tensor& latent) {
    return EvaluateLatent(model, image, latent, r.tau, bits, weights).terms;
  };
  auto objective = [&](const torch::Tensor& latent) {
    return ImageObjective(per_pixel(latent), image);
  };
  // Gradients are taken with respect to the latent only, so the networks'
  // .grad fields stay untouched.
  r.latent = AdaptLatent(objective, r.latent, r.mask, steps, alpha, InnerGradient::kDetached,
                         &r.trace);
  const double scale = ObjectiveScale(image) * static_cast<double>(image.size(0));
  for (auto& v : r.trace) v /= scale;
  {
    torch::NoGradGuard no_grad;
    r.trace.push_back(per_pixel(r.latent).total.mean().item<double>());
  }
  return r;
}

std::vector<MetaEpoch> MetaFinetune(CodecModel& model, const torch::Tensor& patches,
                                    const MetaConfig& config,
                                    const std::function<void(const MetaEpoch&)>& sink) {
  config.Validate();
  METACODEC_CHECK(patches.defined() && patches.size(0) > 0, ErrorCode::kEmptyInput,
                  "training set is empty");
  auto params = model->parameters();
  torch::optim::Adam optimizer(params, torch::optim::AdamOptions(config.outer_lr));
  const auto& cfg = model->config();
  const int64_t count = patches.size(0);
  std::vector<MetaEpoch> history;
  model->train();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = EpochOrder(count, config.seed, epoch);
    MetaEpoch acc;
    acc.epoch = epoch;
    for (int64_t start = 0; start < count; start += config.batch_size) {
      const int64_t end = std::min<int64_t>(start + config.batch_size, count);
      auto idx = torch::tensor(std::vector<int64_t>(order.begin() + start, order.begin() + end));
      auto x = patches.index_select(0, idx);
      AnalysisResult a;
      MetaTask task;
      task.initial_latent = [&] {
        a = Analyze(*model, x);
        return a.masked;
      };
      task.mask = [&] { return a.mask; };
      auto eval = [&](const torch::Tensor& latent) {
        return EvaluateLatent(*model, x, latent, a.tau, cfg.codec.bits, cfg.weights).terms;
      };
      task.inner_objective = [&](const torch::Tensor& latent) {
        return ImageObjective(eval(latent), x);
      };
      task.outer_objective = [&](const torch::Tensor& latent) {
        return eval(latent).total.mean();
      };
      double outer = 0.0;
      auto grads = MetaGradient(task, params, config.inner_iterations, config.inner_lr,
                                config.second_order, &outer);
      METACODEC_CHECK(std::isfinite(outer), ErrorCode::kDivergence,
                      "meta outer loss is not finite");
      optimizer.zero_grad();
      for (size_t i = 0; i < params.size(); ++i) {
        METACODEC_CHECK(torch::isfinite(grads[i]).all().item<bool>(), ErrorCode::kDivergence,
                        "meta gradient is not finite");
        params[i].mutable_grad() = grads[i];
      }
      optimizer.step();
      acc.outer_loss += outer * static_cast<double>(end - start);
    }
    acc.outer_loss /= static_cast<double>(count);
    history.push_back(acc);
    if (sink) sink(acc);
  }
  model->eval();
  return history;
}

}  // namespace metacodec
