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

#ifndef METACODEC_PYRAMID_H_
#define METACODEC_PYRAMID_H_

#include <array>
#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace metacodec {

constexpr int kGroupsPerScale = 3;

// Nearest-neighbour pyramid. levels[0] is the input; levels[i] keeps the
// top-left element of every 2x2 block of levels[i-1]. Odd sizes behave as if
// replicate-padded by one row/column first, which never changes the anchors.
struct ScalePyramid {
  std::vector<torch::Tensor> levels;
  // Unpadded spatial size of every level (the pad record).
  std::vector<std::array<int64_t, 2>> dims;

  int num_scales() const { return static_cast<int>(levels.size()) - 1; }
};

// Works on any dtype; the last two dimensions are spatial.
ScalePyramid BuildPyramid(const torch::Tensor& z, int num_scales);

// Spatial size of level `scale` for an h x w base.
std::array<int64_t, 2> LevelDims(int64_t height, int64_t width, int scale);

// Per-scale coding groups over an h x w grid. Masks are bool [h, w].
// anchors: (even, even); groups: (even, odd), (odd, even), (odd, odd).
struct GroupPartition {
  torch::Tensor anchors;
  std::array<torch::Tensor, kGroupsPerScale> groups;
};

GroupPartition PartitionGroups(int64_t height, int64_t width);

// Nearest-neighbour 2x upsample of the last two dims, cropped to h x w.
torch::Tensor UpsampleTo(const torch::Tensor& t, int64_t height, int64_t width);

}  // namespace metacodec

#endif  // METACODEC_PYRAMID_H_
