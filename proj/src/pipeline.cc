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

#include "metacodec/pipeline.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>

#include "metacodec/error.h"
#include "metacodec/meta.h"
#include "metacodec/tensor_coder.h"

namespace metacodec {

ModelConfig DeskModelConfig(int codec_id) {
  METACODEC_CHECK(codec_id >= 0 && codec_id < static_cast<int>(kCodecLadder.size()),
                  ErrorCode::kUnknownCodec, "codec id outside the ladder");
  constexpr std::array<double, 4> kRateWeight = {0.004, 0.02, 0.1, 0.3};
  constexpr std::array<double, 4> kZeta = {0.75, 0.6, 0.5, 0.75};
  const auto& v = kCodecLadder[static_cast<size_t>(codec_id)];
  ModelConfig c;
  c.codec_id = codec_id;
  c.codec.channels = v.channels;
  c.codec.bits = v.bits;
  c.codec.downsample = 4;
  c.codec.hidden = 32;
  c.codec.zeta = kZeta[static_cast<size_t>(codec_id)];
  c.prob.latent_channels = v.channels;
  c.weights.rate = kRateWeight[static_cast<size_t>(codec_id)];
  c.target_bpp = v.trained_bpp;
  return c;
}

void RateTarget::Validate() const {
  METACODEC_CHECK(bpp > 0 && std::isfinite(bpp), ErrorCode::kInvalidArgument,
                  "target bpp must be positive");
  METACODEC_CHECK(margin > 0 && margin < 1, ErrorCode::kInvalidArgument,
                  "rate margin must be in (0, 1)");
}

CodecBank::CodecBank(std::vector<CodecModel> codecs) : codecs_(std::move(codecs)) {
  for (size_t i = 0; i < codecs_.size(); ++i) {
    METACODEC_CHECK(codecs_[i]->config().codec_id == static_cast<int>(i),
                    ErrorCode::kUnknownCodec, "codec bank entries must be ordered by id");
  }
}

std::string CodecBank::CheckpointName(int codec_id) {
  return "codec" + std::to_string(codec_id) + ".ckpt";
}

CodecBank CodecBank::Load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<CodecModel> codecs;
  for (int id = 0;; ++id) {
    const auto path = fs::path(dir) / CheckpointName(id);
    if (!fs::exists(path)) break;
    codecs.push_back(LoadCheckpoint(path.string()));
  }
  METACODEC_CHECK(!codecs.empty(), ErrorCode::kIo, "no codec checkpoints in " + dir);
  return CodecBank(std::move(codecs));
}

void CodecBank::Save(const std::string& dir) const {
  for (const auto& m : codecs_) {
    SaveCheckpoint(m, (std::filesystem::path(dir) / CheckpointName(m->config().codec_id)).string());
  }
}

CodecModel& CodecBank::model(int codec_id) {
  METACODEC_CHECK(codec_id >= 0 && codec_id < static_cast<int>(codecs_.size()),
                  ErrorCode::kUnknownCodec, "codec " + std::to_string(codec_id) + " is not in the bank");
  return codecs_[static_cast<size_t>(codec_id)];
}

CodecModelImpl& CodecBank::at(int codec_id) { return *model(codec_id); }

int CodecBank::Nearest(double bpp) const {
  METACODEC_CHECK(!codecs_.empty(), ErrorCode::kUnknownCodec, "codec bank is empty");
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < codecs_.size(); ++i) {
    const double gap = std::abs(codecs_[i]->config().target_bpp - bpp);
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<int>(i);
    }
  }
  return best;
}

int CodecBank::MaxBits() const {
  int b = 0;
  for (const auto& m : codecs_) b = std::max(b, m->config().codec.bits);
  return b;
}

EncodedLatent EncodeLatent(CodecModelImpl& model, const torch::Tensor& masked_latent, int bits,
                           int64_t height, int64_t width,
                           const std::vector<uint8_t>& bias_indices) {
  torch::NoGradGuard no_grad;
  const auto& cfg = model.config();
  const auto z = Quantize(masked_latent.detach(), bits);
  const auto encoded = EncodeTensor(*model.prob, z);
  EncodedLatent out;
  auto& h = out.bitstream.header;
  h.codec_id = static_cast<uint8_t>(cfg.codec_id);
  h.bits = static_cast<uint8_t>(bits);
  h.channels = static_cast<uint8_t>(cfg.codec.channels);
  h.num_scales = static_cast<uint8_t>(cfg.prob.num_scales);
  h.downsample_log2 = static_cast<uint8_t>(std::countr_zero(static_cast<unsigned>(cfg.codec.downsample)));
  h.flags = bias_indices.empty() ? 0 : kFlagBiasIndices;
  h.padded_height = static_cast<uint32_t>(masked_latent.size(2) * cfg.codec.downsample);
  h.padded_width = static_cast<uint32_t>(masked_latent.size(3) * cfg.codec.downsample);
  h.height = static_cast<uint32_t>(height);
  h.width = static_cast<uint32_t>(width);
  h.checksum = encoded.checksum;
  out.bitstream.bias_indices = bias_indices;
  out.bitstream.payload = encoded.payload;
  out.bytes = SerializeContainer(out.bitstream);
  out.bpp = 8.0 * static_cast<double>(out.bytes.size()) / static_cast<double>(height * width);
  return out;
}

namespace {

const BiasCodebook* FindCodebook(const CodebookSet& books, int codec_id) {
  const auto it = books.find(codec_id);
  if (it == books.end() || it->second.size() == 0) return nullptr;
  return &it->second;
}

struct Candidate {
  int codec_id = 0;
  int bits = 0;
  torch::Tensor padded;
  torch::Tensor latent;
  EncodedLatent encoded;
};

double BandDistance(const RateTarget& t, double bpp) {
  if (bpp > t.upper()) return bpp - t.upper();
  if (bpp < t.lower()) return t.lower() - bpp;
  return 0.0;
}

}  // namespace

CompressResult Compress(const torch::Tensor& image, const RateTarget& target, CodecBank& bank,
                        const CodebookSet& codebooks, const CompressOptions& options) {
  target.Validate();
  METACODEC_CHECK(image.dim() == 4 && image.size(0) == 1 && image.size(1) == 3 &&
                      image.size(2) > 0 && image.size(3) > 0,
                  ErrorCode::kShapeMismatch, "compress expects a 1 x 3 x H x W image");
  METACODEC_CHECK(options.overfit_budget >= 0 && options.steps_per_round >= 1 &&
                      options.inner_lr > 0 && options.weight_tilt >= 1,
                  ErrorCode::kInvalidArgument, "invalid compress options");
  const int64_t height = image.size(2), width = image.size(3);
  CompressResult result;
  result.trial_bound = static_cast<int>(bank.size()) * bank.MaxBits() + options.overfit_budget;

  auto placeholder = [&](int id, const torch::Tensor& padded) {
    if (FindCodebook(codebooks, id) == nullptr) return std::vector<uint8_t>{};
    const auto grid = MakeTileGrid(padded.size(2), padded.size(3), kBiasTile);
    return std::vector<uint8_t>(static_cast<size_t>(grid.count()), kDefaultBiasIndex);
  };
  auto record = [&](const char* stage, const Candidate& c) {
    ++result.trials;
    result.log.push_back({stage, c.codec_id, c.bits, c.encoded.bpp});
  };

  // Codec and bit-depth search.
  Candidate current;
  auto prepare = [&](int id) {
    auto& model = bank.at(id);
    torch::NoGradGuard no_grad;
    current.codec_id = id;
    current.bits = model.config().codec.bits;
    current.padded = PadImage(image, model.config().codec.downsample).first;
    current.latent = Analyze(model, current.padded).masked;
  };
  prepare(bank.Nearest(target.bpp));
  while (true) {
    current.encoded = EncodeLatent(bank.at(current.codec_id), current.latent, current.bits,
                                   height, width, placeholder(current.codec_id, current.padded));
    record("search", current);
    if (current.encoded.bpp <= target.upper()) break;
    if (current.bits > 1) {
      --current.bits;
    } else if (current.codec_id + 1 < static_cast<int>(bank.size())) {
      prepare(current.codec_id + 1);
    } else {
      break;
    }
  }

  // Overfitting rounds with rebalanced loss weights.
  Candidate best = current;
  double best_distance = BandDistance(target, best.encoded.bpp);
  auto& model = bank.at(current.codec_id);
  LossWeights weights = model.config().weights;
  for (int round = 0; round < options.overfit_budget && best_distance > 0.0; ++round) {
    if (current.encoded.bpp > target.upper()) {
      weights.ms_ssim /= options.weight_tilt;
      weights.mse /= options.weight_tilt;
      weights.perceptual /= options.weight_tilt;
    } else {
      weights.rate /= options.weight_tilt;
    }
    current.latent = OverfitLatent(model, current.padded, options.steps_per_round,
                                   options.inner_lr, weights, current.bits, current.latent)
                         .latent;
    current.encoded = EncodeLatent(model, current.latent, current.bits, height, width,
                                   placeholder(current.codec_id, current.padded));
    record("overfit", current);
    const double distance = BandDistance(target, current.encoded.bpp);
    if (distance < best_distance) {
      best = current;
      best_distance = distance;
    }
  }
  result.best_effort = best_distance > 0.0;

  Bitstream bitstream = best.encoded.bitstream;
  if (const auto* book = FindCodebook(codebooks, best.codec_id)) {
    auto& chosen = bank.at(best.codec_id);
    auto latent_hat = Dequantize(Quantize(best.latent, best.bits));
    result.bias = SelectBiasIndices(chosen, best.padded, latent_hat, *book,
                                    chosen.config().weights, kBiasTile);
    bitstream.bias_indices = result.bias.indices;
  }
  if (result.best_effort) bitstream.header.flags |= kFlagBestEffort;
  result.bytes = SerializeContainer(bitstream);
  result.bitstream = bitstream;
  result.bpp = 8.0 * static_cast<double>(result.bytes.size()) / static_cast<double>(height * width);
  return result;
}

torch::Tensor Decompress(std::span<const uint8_t> bytes, CodecBank& bank,
                         const CodebookSet& codebooks) {
  const auto bs = ParseContainer(bytes);
  const auto& h = bs.header;
  METACODEC_CHECK(h.codec_id < bank.size(), ErrorCode::kUnknownCodec,
                  "bitstream references codec " + std::to_string(h.codec_id) +
                      " which is not in the bank");
  auto& model = bank.at(h.codec_id);
  const auto& cfg = model.config();
  METACODEC_CHECK(h.channels == cfg.codec.channels && h.num_scales == cfg.prob.num_scales &&
                      h.downsample() == static_cast<uint32_t>(cfg.codec.downsample),
                  ErrorCode::kUnknownCodec, "bitstream header does not match the codec");
  METACODEC_CHECK(h.bits >= 1 && h.bits <= 8, ErrorCode::kInvalidArgument,
                  "bitstream bit depth out of range");
  torch::NoGradGuard no_grad;
  const int64_t s = cfg.codec.downsample;
  const auto z = DecodeTensor(*model.prob, bs.payload, h.checksum, h.padded_height / s,
                              h.padded_width / s, h.bits);
  const auto latent_hat = Dequantize(z);
  torch::Tensor recon;
  if (h.flags & kFlagBiasIndices) {
    const auto it = codebooks.find(h.codec_id);
    METACODEC_CHECK(it != codebooks.end(), ErrorCode::kCodebookMismatch,
                    "bitstream signals bias indices but no codebook is loaded for its codec");
    recon = DecodeWithBiasIndices(model, latent_hat, bs.bias_indices, it->second, kBiasTile);
  } else {
    recon = model.decoder->forward(latent_hat);
  }
  return CropImage(recon, {h.height, h.width});
}

}  // namespace metacodec
