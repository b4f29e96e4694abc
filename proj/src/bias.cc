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

#include "metacodec/bias.h"

#include <limits>
#include <map>
#include <random>

#include "metacodec/error.h"

namespace metacodec {

using torch::indexing::Slice;

void BiasCodebook::Validate(int64_t bias_count) const {
  if (size() == 0) return;
  METACODEC_CHECK(centroids.dim() == 2 && size() <= kMaxBiasClusters,
                  ErrorCode::kCodebookMismatch, "codebook holds more than 255 centroids");
  METACODEC_CHECK(centroids.size(1) == bias_count, ErrorCode::kCodebookMismatch,
                  "codebook vector length does not match decoder bias count");
}

torch::Tensor QuantizedLatent(CodecModelImpl& model, const torch::Tensor& image) {
  torch::NoGradGuard no_grad;
  auto a = Analyze(model, image);
  return Dequantize(Quantize(a.masked, model.config().codec.bits));
}

torch::Tensor OverfitBiases(CodecModelImpl& model, const torch::Tensor& patch,
                            const BiasOverfitOptions& options, const LossWeights& weights) {
  METACODEC_CHECK(options.iterations >= 0 && options.learning_rate >= 0,
                  ErrorCode::kInvalidArgument, "invalid bias overfitting options");
  torch::AutoGradMode enable_grad(true);
  auto latent = QuantizedLatent(model, patch).to(patch.scalar_type());
  auto biases = model.decoder->DefaultBiases().to(patch.scalar_type());
  const double scale = ObjectiveScale(patch);
  for (int it = 0; it < options.iterations; ++it) {
    auto b = biases.detach().requires_grad_(true);
    auto recon = model.decoder->forward(latent, b);
    auto loss = DistortionLoss(patch, recon, weights).sum() * scale;
    auto g = torch::autograd::grad({loss}, {b})[0];
    torch::NoGradGuard no_grad;
    biases = b.detach() - options.learning_rate * g;
  }
  return biases.detach();
}

namespace {

torch::Tensor SquaredDistances(const torch::Tensor& data, const torch::Tensor& centroids) {
  return (data.unsqueeze(1) - centroids.unsqueeze(0)).pow(2).sum(-1);
}

}  // namespace

KMeansResult KMeans(const torch::Tensor& data, int k, uint64_t seed, int max_iterations) {
  METACODEC_CHECK(data.dim() == 2 && data.size(0) > 0, ErrorCode::kEmptyInput,
                  "k-means needs at least one vector");
  METACODEC_CHECK(k >= 1 && max_iterations >= 1, ErrorCode::kInvalidArgument,
                  "k and the iteration limit must be positive");
  auto x = data.to(torch::kDouble).contiguous();
  auto unique = std::get<0>(torch::unique_dim(x, 0));
  KMeansResult r;
  const int64_t n = x.size(0);
  if (unique.size(0) <= k) {
    r.centroids = unique;
    auto d = SquaredDistances(x, unique);
    auto assign = d.argmin(1);
    for (int64_t i = 0; i < n; ++i) r.assignment.push_back(assign[i].item<int64_t>());
    r.objective.push_back(0.0);
    return r;
  }

  // k-means++ seeding over the distinct rows.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int64_t m = unique.size(0);
  std::vector<int64_t> chosen{static_cast<int64_t>(rng() % static_cast<uint64_t>(m))};
  auto nearest = SquaredDistances(unique, unique.index({chosen[0]}).unsqueeze(0)).squeeze(1);
  while (static_cast<int>(chosen.size()) < k) {
    const double total = nearest.sum().item<double>();
    double u = uniform(rng) * total;
    auto acc = nearest.accessor<double, 1>();
    int64_t pick = m - 1;
    for (int64_t i = 0; i < m; ++i) {
      if (acc[i] <= 0.0) continue;
      u -= acc[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    chosen.push_back(pick);
    auto d = SquaredDistances(unique, unique.index({pick}).unsqueeze(0)).squeeze(1);
    nearest = torch::minimum(nearest, d);
  }
  auto centroids = unique.index_select(0, torch::tensor(chosen));

  torch::Tensor assign;
  for (int it = 0; it < max_iterations; ++it) {
    auto d = SquaredDistances(x, centroids);
    auto [best, next] = d.min(1);
    r.objective.push_back(best.sum().item<double>());
    r.iterations = it + 1;
    const bool fixpoint = assign.defined() && torch::equal(assign, next);
    assign = next;
    if (fixpoint) break;
    auto sums = torch::zeros_like(centroids).index_add_(0, assign, x);
    auto counts = torch::zeros({k}, x.options()).index_add_(0, assign, torch::ones({n}, x.options()));
    auto occupied = counts > 0;
    // Empty clusters keep their previous centroid.
    centroids = torch::where(occupied.unsqueeze(1), sums / counts.clamp_min(1.0).unsqueeze(1),
                             centroids);
  }
  r.centroids = centroids;
  for (int64_t i = 0; i < n; ++i) r.assignment.push_back(assign[i].item<int64_t>());
  return r;
}

BiasCodebook BuildBiasClusters(CodecModelImpl& model, const torch::Tensor& patches, int k,
                               const BiasOverfitOptions& options, const LossWeights& weights,
                               uint64_t seed) {
  METACODEC_CHECK(patches.defined() && patches.size(0) > 0, ErrorCode::kEmptyInput,
                  "bias clustering needs at least one patch");
  METACODEC_CHECK(k >= 1, ErrorCode::kInvalidArgument, "cluster count must be positive");
  k = std::min(k, kMaxBiasClusters);
  std::vector<torch::Tensor> vectors;
  for (int64_t i = 0; i < patches.size(0); ++i) {
    vectors.push_back(
        OverfitBiases(model, patches.slice(0, i, i + 1), options, weights).to(torch::kDouble));
  }
  auto km = KMeans(torch::stack(vectors), k, seed);
  BiasCodebook book;
  book.centroids = km.centroids.to(torch::kFloat);
  book.seed = seed;
  book.iterations = km.iterations;
  return book;
}

namespace {

double PatchLoss(const torch::Tensor& image, const torch::Tensor& recon,
                 const LossWeights& weights) {
  return DistortionLoss(image, recon, weights).sum().item<double>();
}

torch::Tensor Centroid(const BiasCodebook& codebook, int64_t index, const torch::Tensor& like) {
  return codebook.centroids.index({index}).to(like.scalar_type());
}

}  // namespace

uint8_t SelectBiasCluster(CodecModelImpl& model, const torch::Tensor& image_patch,
                          const torch::Tensor& latent_patch, const BiasCodebook& codebook,
                          const LossWeights& weights) {
  codebook.Validate(model.decoder->bias_count());
  torch::NoGradGuard no_grad;
  double best = PatchLoss(image_patch, model.decoder->forward(latent_patch), weights);
  uint8_t index = kDefaultBiasIndex;
  for (int64_t j = 0; j < codebook.size(); ++j) {
    auto recon = model.decoder->forward(latent_patch, Centroid(codebook, j, latent_patch));
    const double loss = PatchLoss(image_patch, recon, weights);
    if (loss < best) {
      best = loss;
      index = static_cast<uint8_t>(j);
    }
  }
  return index;
}

TileGrid MakeTileGrid(int64_t padded_height, int64_t padded_width, int64_t tile) {
  METACODEC_CHECK(tile > 0, ErrorCode::kInvalidArgument, "tile size must be positive");
  return {(padded_height + tile - 1) / tile, (padded_width + tile - 1) / tile, tile};
}

namespace {

torch::Tensor TileOf(const torch::Tensor& t, const TileGrid& grid, int64_t r, int64_t c) {
  return t.index({Slice(), Slice(), Slice(r * grid.tile, (r + 1) * grid.tile),
                  Slice(c * grid.tile, (c + 1) * grid.tile)});
}

}  // namespace

BiasSelection SelectBiasIndices(CodecModelImpl& model, const torch::Tensor& padded_image,
                                const torch::Tensor& latent_hat, const BiasCodebook& codebook,
                                const LossWeights& weights, int64_t tile) {
  codebook.Validate(model.decoder->bias_count());
  torch::NoGradGuard no_grad;
  const auto grid = MakeTileGrid(padded_image.size(2), padded_image.size(3), tile);
  BiasSelection s;
  s.indices.assign(grid.count(), kDefaultBiasIndex);
  auto recon = model.decoder->forward(latent_hat);
  for (int64_t r = 0; r < grid.rows; ++r) {
    for (int64_t c = 0; c < grid.cols; ++c) {
      s.default_loss.push_back(
          PatchLoss(TileOf(padded_image, grid, r, c), TileOf(recon, grid, r, c), weights));
    }
  }
  s.selected_loss = s.default_loss;
  for (int64_t j = 0; j < codebook.size(); ++j) {
    recon = model.decoder->forward(latent_hat, Centroid(codebook, j, latent_hat));
    for (int64_t r = 0; r < grid.rows; ++r) {
      for (int64_t c = 0; c < grid.cols; ++c) {
        const auto t = static_cast<size_t>(r * grid.cols + c);
        const double loss =
            PatchLoss(TileOf(padded_image, grid, r, c), TileOf(recon, grid, r, c), weights);
        if (loss < s.selected_loss[t]) {
          s.selected_loss[t] = loss;
          s.indices[t] = static_cast<uint8_t>(j);
        }
      }
    }
  }
  return s;
}

torch::Tensor DecodeWithBiasIndices(CodecModelImpl& model, const torch::Tensor& latent_hat,
                                    const std::vector<uint8_t>& indices,
                                    const BiasCodebook& codebook, int64_t tile) {
  torch::NoGradGuard no_grad;
  const int64_t s = model.config().codec.downsample;
  const auto grid = MakeTileGrid(latent_hat.size(2) * s, latent_hat.size(3) * s, tile);
  METACODEC_CHECK(static_cast<int64_t>(indices.size()) == grid.count(),
                  ErrorCode::kLengthMismatch, "bias index count does not match the tile grid");
  std::map<uint8_t, std::vector<int64_t>> by_index;
  for (int64_t t = 0; t < grid.count(); ++t) {
    const uint8_t idx = indices[static_cast<size_t>(t)];
    METACODEC_CHECK(idx == kDefaultBiasIndex || idx < codebook.size(),
                    ErrorCode::kCodebookMismatch, "bias index exceeds codebook size");
    by_index[idx].push_back(t);
  }
  auto out = model.decoder->forward(latent_hat);
  for (const auto& [idx, tiles] : by_index) {
    if (idx == kDefaultBiasIndex) continue;
    auto recon = model.decoder->forward(latent_hat, Centroid(codebook, idx, latent_hat));
    for (int64_t t : tiles) {
      const int64_t r = t / grid.cols, c = t % grid.cols;
      TileOf(out, grid, r, c).copy_(TileOf(recon, grid, r, c));
    }
  }
  return out;
}

}  // namespace metacodec
