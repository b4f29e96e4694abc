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

#include "metacodec/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <ATen/CPUGeneratorImpl.h>

#include "metacodec/error.h"
#include "metacodec/image_io.h"

namespace metacodec {

torch::Tensor SynthImage(int64_t height, int64_t width, uint64_t seed) {
  METACODEC_CHECK(height > 0 && width > 0, ErrorCode::kInvalidArgument,
                  "image dimensions must be positive");
  torch::NoGradGuard no_grad;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto ys = torch::linspace(0.0, 1.0, height, torch::kFloat).view({height, 1}).expand({height, width});
  auto xs = torch::linspace(0.0, 1.0, width, torch::kFloat).view({1, width}).expand({height, width});
  const double aspect = static_cast<double>(width) / static_cast<double>(height);

  std::vector<torch::Tensor> channels;
  for (int c = 0; c < 3; ++c) {
    channels.push_back(u(rng) * 0.6 + 0.2 + (u(rng) - 0.5) * 0.5 * xs + (u(rng) - 0.5) * 0.5 * ys);
  }
  auto img = torch::stack(channels);

  const int shapes = 3 + static_cast<int>(rng() % 5);
  for (int s = 0; s < shapes; ++s) {
    const double cx = u(rng), cy = u(rng);
    const double rx = 0.05 + 0.3 * u(rng), ry = 0.05 + 0.3 * u(rng);
    const double sharp = 20.0 + 200.0 * u(rng);
    torch::Tensor inside;
    if (rng() % 2 == 0) {
      auto d = ((xs - cx) / rx).pow(2) + ((ys - cy) / ry).pow(2);
      inside = torch::sigmoid((1.0 - d) * sharp * std::min(rx, ry));
    } else {
      auto d = torch::maximum((xs - cx).abs() / rx, (ys - cy).abs() / ry);
      inside = torch::sigmoid((1.0 - d) * sharp * std::min(rx, ry));
    }
    auto color = torch::tensor({u(rng), u(rng), u(rng)}, torch::kFloat).view({3, 1, 1});
    img = img * (1.0 - inside) + color * inside;
  }

  const double theta = u(rng) * std::numbers::pi;
  const double freq = 4.0 + 40.0 * u(rng);
  const double amp = 0.02 + 0.1 * u(rng);
  auto phase = (xs * aspect * std::cos(theta) + ys * std::sin(theta)) * freq * 2.0 * std::numbers::pi;
  img = img + amp * torch::sin(phase).unsqueeze(0);

  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed ^ 0x5DEECE66DULL);
  const double sigma = 0.005 + 0.02 * u(rng);
  img = img + sigma * at::randn({3, height, width}, gen, torch::kFloat);
  return img.clamp(0.0, 1.0).unsqueeze(0).contiguous();
}

torch::Tensor SynthBatch(int64_t count, int64_t size, uint64_t seed) {
  METACODEC_CHECK(count > 0, ErrorCode::kEmptyInput, "batch must not be empty");
  std::vector<torch::Tensor> items;
  for (int64_t i = 0; i < count; ++i) {
    items.push_back(SynthImage(size, size, seed * 1000003ULL + static_cast<uint64_t>(i)));
  }
  return torch::cat(items);
}

std::vector<std::string> ListPngFiles(const std::string& dir) {
  namespace fs = std::filesystem;
  METACODEC_CHECK(fs::is_directory(dir), ErrorCode::kIo, dir + " is not a directory");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

torch::Tensor CropsFromDirectory(const std::string& dir, int64_t count, int64_t size,
                                 uint64_t seed) {
  const auto files = ListPngFiles(dir);
  METACODEC_CHECK(!files.empty(), ErrorCode::kEmptyInput, "no PNG files in " + dir);
  std::vector<torch::Tensor> images;
  for (const auto& f : files) {
    auto img = ReadPng(f);
    if (img.size(2) >= size && img.size(3) >= size) images.push_back(img);
  }
  METACODEC_CHECK(!images.empty(), ErrorCode::kEmptyInput,
                  "no PNG in " + dir + " is large enough for the patch size");
  std::mt19937_64 rng(seed);
  std::vector<torch::Tensor> crops;
  for (int64_t i = 0; i < count; ++i) {
    const auto& img = images[rng() % images.size()];
    const int64_t y = static_cast<int64_t>(rng() % static_cast<uint64_t>(img.size(2) - size + 1));
    const int64_t x = static_cast<int64_t>(rng() % static_cast<uint64_t>(img.size(3) - size + 1));
    crops.push_back(img.slice(2, y, y + size).slice(3, x, x + size));
  }
  return torch::cat(crops).contiguous();
}

}  // namespace metacodec
