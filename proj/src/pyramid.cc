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

#include "metacodec/pyramid.h"

#include "metacodec/error.h"

namespace metacodec {

using torch::indexing::Ellipsis;
using torch::indexing::None;
using torch::indexing::Slice;

std::array<int64_t, 2> LevelDims(int64_t height, int64_t width, int scale) {
  for (int i = 0; i < scale; ++i) {
    height = (height + 1) / 2;
    width = (width + 1) / 2;
  }
  return {height, width};
}

ScalePyramid BuildPyramid(const torch::Tensor& z, int num_scales) {
  METACODEC_CHECK(num_scales >= 1, ErrorCode::kInvalidArgument,
                  "pyramid needs at least one scale");
  METACODEC_CHECK(z.dim() >= 2, ErrorCode::kShapeMismatch,
                  "pyramid input needs two spatial dims");
  ScalePyramid pyramid;
  pyramid.levels.push_back(z);
  pyramid.dims.push_back({z.size(-2), z.size(-1)});
  for (int i = 1; i <= num_scales; ++i) {
    const auto& prev = pyramid.levels.back();
    auto next = prev.index({Ellipsis, Slice(None, None, 2), Slice(None, None, 2)});
    pyramid.dims.push_back({next.size(-2), next.size(-1)});
    pyramid.levels.push_back(next);
  }
  return pyramid;
}

GroupPartition PartitionGroups(int64_t height, int64_t width) {
  auto opts = torch::TensorOptions().dtype(torch::kLong);
  auto row_odd = (torch::arange(height, opts) % 2).view({height, 1}) == 1;
  auto col_odd = (torch::arange(width, opts) % 2).view({1, width}) == 1;
  GroupPartition p;
  p.anchors = (~row_odd) & (~col_odd);
  p.groups[0] = (~row_odd) & col_odd;
  p.groups[1] = row_odd & (~col_odd);
  p.groups[2] = row_odd & col_odd;
  return p;
}

torch::Tensor UpsampleTo(const torch::Tensor& t, int64_t height, int64_t width) {
  auto up = t.repeat_interleave(2, -2).repeat_interleave(2, -1);
  return up.index({Ellipsis, Slice(0, height), Slice(0, width)});
}

}  // namespace metacodec
