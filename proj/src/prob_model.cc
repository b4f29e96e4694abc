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

#include "metacodec/prob_model.h"

#include "metacodec/error.h"

namespace metacodec {

using torch::indexing::Ellipsis;
using torch::indexing::None;
using torch::indexing::Slice;

void ProbModelConfig::Validate() const {
  METACODEC_CHECK(latent_channels >= 1 && num_scales >= 1 && mixtures >= 1 &&
                      context_channels >= 1,
                  ErrorCode::kInvalidArgument, "invalid probability model config");
}

ProbModelImpl::ProbModelImpl(const ProbModelConfig& config) : config_(config) {
  config_.Validate();
  const int c = config_.latent_channels;
  const int q = config_.context_channels;
  torch::nn::Sequential trunk;
  int in = c + 1 + q;
  for (int i = 0; i < 4; ++i) {
    trunk->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, q, 3).padding(1)));
    trunk->push_back(torch::nn::LeakyReLU(
        torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    in = q;
  }
  trunk_ = register_module("trunk", trunk);
  param_head_ = register_module(
      "param_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(q, 3 * c * config_.mixtures, 1)));
  context_head_ = register_module(
      "context_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(q, q, 1)));
}

std::pair<MixtureParams, torch::Tensor> ProbModelImpl::PredictGroup(
    const torch::Tensor& z_hat, const torch::Tensor& availability,
    const torch::Tensor& context) {
  const int64_t c = config_.latent_channels;
  const int64_t k = config_.mixtures;
  METACODEC_CHECK(z_hat.dim() == 4 && z_hat.size(1) == c,
                  ErrorCode::kShapeMismatch, "z_hat channel count mismatch");
  METACODEC_CHECK(availability.dim() == 4 && availability.size(1) == 1 &&
                      context.dim() == 4 &&
                      context.size(1) == config_.context_channels &&
                      availability.size(2) == z_hat.size(2) &&
                      context.size(2) == z_hat.size(2) &&
                      availability.size(3) == z_hat.size(3) &&
                      context.size(3) == z_hat.size(3),
                  ErrorCode::kShapeMismatch, "context/availability shape mismatch");
  auto features = trunk_->forward(torch::cat({z_hat, availability, context}, 1));
  const int64_t n = z_hat.size(0), h = z_hat.size(2), w = z_hat.size(3);
  auto raw = param_head_->forward(features)
                 .view({n, 3, c, k, h, w})
                 .permute({0, 1, 2, 4, 5, 3});
  MixtureParams params{raw.select(1, 0), raw.select(1, 1),
                       raw.select(1, 2).clamp_min(kMinLogScale)};
  return {params, context_head_->forward(features)};
}

void RunProgressive(ProbModelImpl& model, std::vector<torch::Tensor>& levels,
                    bool fill_anchors, const StepCallback& on_step) {
  const int num_scales = model.config().num_scales;
  METACODEC_CHECK(static_cast<int>(levels.size()) == num_scales + 1,
                  ErrorCode::kShapeMismatch, "pyramid depth does not match model");
  const auto& top = levels.back();
  const int64_t n = top.size(0);
  const int64_t q_channels = model.config().context_channels;
  torch::Tensor context;
  for (int scale = num_scales; scale >= 1; --scale) {
    auto& level = levels[scale - 1];
    const int64_t h = level.size(2), w = level.size(3);
    if (fill_anchors) {
      torch::NoGradGuard no_grad;
      level.index_put_({Slice(), Slice(), Slice(None, None, 2), Slice(None, None, 2)},
                       levels[scale]);
    }
    auto upsampled = UpsampleTo(levels[scale], h, w);
    context = context.defined()
                  ? UpsampleTo(context, h, w)
                  : torch::zeros({n, q_channels, h, w}, top.options());
    const auto partition = PartitionGroups(h, w);
    auto available = partition.anchors;
    for (int g = 0; g < kGroupsPerScale; ++g) {
      auto z_hat = torch::where(available, level, upsampled);
      auto avail = available.to(top.scalar_type()).expand({n, 1, h, w});
      auto [params, next] = model.PredictGroup(z_hat, avail, context);
      context = next;
      on_step(scale, g, partition.groups[g], params, level);
      available = available | partition.groups[g];
    }
  }
}

torch::Tensor RateLoss(ProbModelImpl& model, const torch::Tensor& latent_hat,
                       const SymbolTensor& z, std::vector<torch::Tensor>* group_bits) {
  METACODEC_CHECK(latent_hat.sizes() == z.symbols.sizes(), ErrorCode::kShapeMismatch,
                  "latent and symbol shapes differ");
  const int num_scales = model.config().num_scales;
  auto values = BuildPyramid(latent_hat, num_scales);
  auto symbols = BuildPyramid(z.symbols, num_scales);
  const auto& top = values.levels.back();
  auto total = torch::full({latent_hat.size(0)},
                           static_cast<double>(z.bits) *
                               static_cast<double>(top[0].numel()),
                           latent_hat.options());
  RunProgressive(model, values.levels, false,
                 [&](int scale, int, const torch::Tensor& group_mask,
                     const MixtureParams& params, torch::Tensor& level) {
                   const auto& sym = symbols.levels[scale - 1];
                   auto pmf = ApplyProbabilityFloor(
                       DiscretizedLogisticPmfAt(params, level, sym, z.bits), z.bits);
                   auto mask = group_mask.to(level.scalar_type());
                   auto bits = (-torch::log2(pmf) * mask).sum({1, 2, 3});
                   if (group_bits) group_bits->push_back(bits);
                   total = total + bits;
                 });
  return total;
}

}  // namespace metacodec
