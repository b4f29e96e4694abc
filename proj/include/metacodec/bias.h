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

#ifndef METACODEC_BIAS_H_
#define METACODEC_BIAS_H_

// Decoder bias overfitting, the k-means bias codebook and per-tile
// selection of codebook entries.

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "metacodec/model.h"

namespace metacodec {

constexpr uint8_t kDefaultBiasIndex = 255;
constexpr int kMaxBiasClusters = 255;

struct BiasCodebook {
  torch::Tensor centroids;  // K x D float; K may be 0
  uint64_t seed = 0;
  int iterations = 0;

  int64_t size() const { return centroids.defined() ? centroids.size(0) : 0; }
  void Validate(int64_t bias_count) const;
};

struct BiasOverfitOptions {
  int iterations = 50;
  double learning_rate = 1e-2;
};

// Masked, quantized latent of `image` under the model's own bit depth.
torch::Tensor QuantizedLatent(CodecModelImpl& model, const torch::Tensor& image);

// Plain gradient descent on the flat decoder bias vector only. The loss is
// distortion-only, scaled per image like the latent overfitting objective.
torch::Tensor OverfitBiases(CodecModelImpl& model, const torch::Tensor& patch,
                            const BiasOverfitOptions& options, const LossWeights& weights);

struct KMeansResult {
  torch::Tensor centroids;        // K x D
  std::vector<int64_t> assignment;
  std::vector<double> objective;  // sum of squared distances after each assignment
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding on the distinct rows of `data`.
// When there are at most k distinct rows they become the centroids.
KMeansResult KMeans(const torch::Tensor& data, int k, uint64_t seed, int max_iterations = 100);

BiasCodebook BuildBiasClusters(CodecModelImpl& model, const torch::Tensor& patches, int k,
                               const BiasOverfitOptions& options, const LossWeights& weights,
                               uint64_t seed);

// Index of the entry (255 = default biases) with the lowest distortion on
// the patch. Ties go to 255, then to the lower index.
uint8_t SelectBiasCluster(CodecModelImpl& model, const torch::Tensor& image_patch,
                          const torch::Tensor& latent_patch, const BiasCodebook& codebook,
                          const LossWeights& weights);

struct TileGrid {
  int64_t rows = 0;
  int64_t cols = 0;
  int64_t tile = 0;
  int64_t count() const { return rows * cols; }
};

TileGrid MakeTileGrid(int64_t padded_height, int64_t padded_width, int64_t tile);

struct BiasSelection {
  std::vector<uint8_t> indices;
  std::vector<double> default_loss;   // per tile
  std::vector<double> selected_loss;  // per tile
};

// Per-tile selection over a whole padded image using one full decode per
// codebook entry.
BiasSelection SelectBiasIndices(CodecModelImpl& model, const torch::Tensor& padded_image,
                                const torch::Tensor& latent_hat, const BiasCodebook& codebook,
                                const LossWeights& weights, int64_t tile);

// Decodes `latent_hat` with the signaled per-tile biases.
torch::Tensor DecodeWithBiasIndices(CodecModelImpl& model, const torch::Tensor& latent_hat,
                                    const std::vector<uint8_t>& indices,
                                    const BiasCodebook& codebook, int64_t tile);

}  // namespace metacodec

#endif  // METACODEC_BIAS_H_
