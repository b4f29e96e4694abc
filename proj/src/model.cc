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

#include "metacodec/model.h"

#include "metacodec/error.h"

namespace metacodec {

void ModelConfig::Validate() const {
  codec.Validate();
  prob.Validate();
  weights.Validate();
  METACODEC_CHECK(prob.latent_channels == codec.channels, ErrorCode::kInvalidArgument,
                  "probability model channel count differs from codec");
  METACODEC_CHECK(codec_id >= 0 && codec_id < 256, ErrorCode::kInvalidArgument,
                  "codec id must fit in one byte");
}

CodecModelImpl::CodecModelImpl(const ModelConfig& config) : config_(config) {
  config_.Validate();
  const auto& c = config_.codec;
  encoder = register_module("encoder", AnalysisNet(c.channels, c.hidden, c.downsample));
  importance = register_module("importance", AnalysisNet(1, c.hidden, c.downsample));
  decoder = register_module("decoder", DecoderNet(c.channels, c.hidden, c.downsample));
  prob = register_module("prob", ProbModel(config_.prob));
}

CodecModel CreateModel(const ModelConfig& config, uint64_t seed) {
  torch::manual_seed(seed);
  return CodecModel(config);
}

CodecModel CloneModel(const CodecModel& model) {
  CodecModel copy(model->config());
  torch::NoGradGuard no_grad;
  auto src = model->named_parameters();
  for (auto& item : copy->named_parameters()) {
    item.value().copy_(src[item.key()]);
  }
  return copy;
}

AnalysisResult Analyze(CodecModelImpl& model, const torch::Tensor& image) {
  const auto& c = model.config().codec;
  METACODEC_CHECK(image.dim() == 4 && image.size(1) == 3 &&
                      image.size(2) % c.downsample == 0 && image.size(3) % c.downsample == 0,
                  ErrorCode::kShapeMismatch,
                  "image must be N x 3 x H x W with H, W divisible by the downsample factor");
  AnalysisResult r;
  r.latent = model.encoder->forward(image);
  r.tau = model.importance->forward(image);
  r.mask = ExpandMaskStraightThrough(r.tau, c.channels);
  r.masked = r.latent * r.mask;
  return r;
}

LatentEval EvaluateLatent(CodecModelImpl& model, const torch::Tensor& image,
                          const torch::Tensor& masked_latent, const torch::Tensor& tau,
                          int bits, const LossWeights& weights, const torch::Tensor& biases) {
  LatentEval e;
  auto latent_hat = QuantizeStraightThrough(masked_latent, bits);
  e.symbols = Quantize(masked_latent, bits);
  e.recon = model.decoder->forward(latent_hat, biases);
  e.rate_bits = RateLoss(*model.prob, latent_hat, e.symbols);
  e.terms = RdLoss({image, e.recon, e.rate_bits, tau, model.config().codec.zeta}, weights);
  return e;
}

double ObjectiveScale(const torch::Tensor& image) {
  return static_cast<double>(image.size(2) * image.size(3)) / static_cast<double>(kReferenceArea);
}

torch::Tensor ImageObjective(const RdTerms& terms, const torch::Tensor& image) {
  return terms.total.sum() * ObjectiveScale(image);
}

}  // namespace metacodec
