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

#ifndef METACODEC_MODEL_H_
#define METACODEC_MODEL_H_

// The four trainable networks of one codec variant plus its configuration.

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "metacodec/codec.h"
#include "metacodec/losses.h"
#include "metacodec/prob_model.h"

namespace metacodec {

struct ModelConfig {
  int codec_id = 0;
  CodecConfig codec;
  ProbModelConfig prob;
  LossWeights weights;
  double target_bpp = 0.0;  // rate the variant was trained for
  std::string provenance;   // free-form training record

  void Validate() const;
};

class CodecModelImpl : public torch::nn::Module {
 public:
  explicit CodecModelImpl(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }

  AnalysisNet encoder{nullptr};
  AnalysisNet importance{nullptr};
  DecoderNet decoder{nullptr};
  ProbModel prob{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(CodecModel);

// Seeds torch's generator before building so equal seeds give equal weights.
CodecModel CreateModel(const ModelConfig& config, uint64_t seed);
CodecModel CloneModel(const CodecModel& model);

struct AnalysisResult {
  torch::Tensor latent;  // y
  torch::Tensor tau;
  torch::Tensor mask;    // binary forward value, relaxed gradient
  torch::Tensor masked;  // y * mask
};

AnalysisResult Analyze(CodecModelImpl& model, const torch::Tensor& image);

struct LatentEval {
  RdTerms terms;
  torch::Tensor recon;
  torch::Tensor rate_bits;
  SymbolTensor symbols;
};

// Quantizes (straight-through) a masked latent at `bits`, decodes it and
// scores it. `biases`, when defined, replace the decoder's conv biases.
LatentEval EvaluateLatent(CodecModelImpl& model, const torch::Tensor& image,
                          const torch::Tensor& masked_latent, const torch::Tensor& tau,
                          int bits, const LossWeights& weights,
                          const torch::Tensor& biases = {});

// Area over which the latent overfitting objective is a plain per-pixel mean.
constexpr int64_t kReferenceArea = 64 * 64;

// H * W / kReferenceArea for an N x C x H x W image.
double ObjectiveScale(const torch::Tensor& image);

// Objective for latent overfitting: the per-pixel RD loss of each image
// scaled by ObjectiveScale, summed over the batch. A latent element then sees
// the same gradient magnitude whatever the image size, so one step size
// serves training patches and full images alike.
torch::Tensor ImageObjective(const RdTerms& terms, const torch::Tensor& image);

}  // namespace metacodec

#endif  // METACODEC_MODEL_H_
