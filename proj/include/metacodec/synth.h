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

#ifndef METACODEC_SYNTH_H_
#define METACODEC_SYNTH_H_

// Deterministic procedural RGB images: smooth gradients, soft-edged shapes,
// oriented texture and sensor-like noise. Used as the desk training and
// evaluation corpus.

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace metacodec {

// 1 x 3 x height x width in [0, 1].
torch::Tensor SynthImage(int64_t height, int64_t width, uint64_t seed);

// count x 3 x size x size, each from its own seed derived from `seed`.
torch::Tensor SynthBatch(int64_t count, int64_t size, uint64_t seed);

// Random size x size crops from the PNG files in `dir` (sorted by name).
torch::Tensor CropsFromDirectory(const std::string& dir, int64_t count, int64_t size,
                                 uint64_t seed);

std::vector<std::string> ListPngFiles(const std::string& dir);

}  // namespace metacodec

#endif  // METACODEC_SYNTH_H_
