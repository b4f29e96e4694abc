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

#ifndef METACODEC_PIPELINE_H_
#define METACODEC_PIPELINE_H_

// Rate-controlled compression over a bank of codec variants.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "metacodec/bias.h"
#include "metacodec/checkpoint.h"
#include "metacodec/container.h"
#include "metacodec/model.h"

namespace metacodec {

// Bias indices are signaled per tile of this size on the padded image.
constexpr int64_t kBiasTile = 64;

constexpr std::array<double, 8> kTargetBitrates = {2.0, 1.5, 1.0, 0.75, 0.5, 0.25, 0.12, 0.06};

struct CodecVariant {
  int channels;
  int bits;
  double trained_bpp;
};

constexpr std::array<CodecVariant, 4> kCodecLadder = {{
    {8, 8, 2.0},
    {6, 8, 0.75},
    {3, 4, 0.12},
    {1, 4, 0.06},
}};

// Desk-scale configuration of ladder entry `codec_id`.
ModelConfig DeskModelConfig(int codec_id);

struct RateTarget {
  double bpp = 1.0;
  double margin = 0.15;  // fraction of bpp

  void Validate() const;
  double lower() const { return bpp * (1.0 - margin); }
  double upper() const { return bpp * (1.0 + margin); }
  bool Contains(double achieved) const { return achieved >= lower() && achieved <= upper(); }
};

class CodecBank {
 public:
  CodecBank() = default;
  explicit CodecBank(std::vector<CodecModel> codecs);

  static CodecBank Load(const std::string& dir);
  void Save(const std::string& dir) const;
  static std::string CheckpointName(int codec_id);

  size_t size() const { return codecs_.size(); }
  CodecModelImpl& at(int codec_id);
  CodecModel& model(int codec_id);
  // Codec whose trained rate is nearest to `bpp`; ties go to the higher rate.
  int Nearest(double bpp) const;
  int MaxBits() const;

 private:
  std::vector<CodecModel> codecs_;
};

struct CompressOptions {
  int overfit_budget = 10;  // overfitting rounds, one trial each
  int steps_per_round = 10;
  double inner_lr = 0.1;
  // Each round divides the weights of the terms pulling away from the band
  // by this factor: distortion when the rate is too high, rate when too low.
  double weight_tilt = 4.0;
};

struct TrialRecord {
  std::string stage;  // "search" or "overfit"
  int codec_id = 0;
  int bits = 0;
  double bpp = 0.0;
};

struct CompressResult {
  std::vector<uint8_t> bytes;
  Bitstream bitstream;
  double bpp = 0.0;
  bool best_effort = false;
  int trials = 0;
  int trial_bound = 0;
  std::vector<TrialRecord> log;
  BiasSelection bias;
};

struct EncodedLatent {
  Bitstream bitstream;
  std::vector<uint8_t> bytes;
  double bpp = 0.0;  // over the original pixel count
};

// Codes a masked latent of a padded image at `bits`. `bias_indices` are
// placed in the container as given.
EncodedLatent EncodeLatent(CodecModelImpl& model, const torch::Tensor& masked_latent, int bits,
                           int64_t height, int64_t width,
                           const std::vector<uint8_t>& bias_indices);

CompressResult Compress(const torch::Tensor& image, const RateTarget& target, CodecBank& bank,
                        const CodebookSet& codebooks, const CompressOptions& options = {});

// Decoded image, cropped to the original dimensions.
torch::Tensor Decompress(std::span<const uint8_t> bytes, CodecBank& bank,
                         const CodebookSet& codebooks);

}  // namespace metacodec

#endif  // METACODEC_PIPELINE_H_
