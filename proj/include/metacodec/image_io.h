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

#ifndef METACODEC_IMAGE_IO_H_
#define METACODEC_IMAGE_IO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace metacodec {

// 8-bit RGB PNG to a 1 x 3 x H x W float tensor with values v / 255.
torch::Tensor DecodePng(std::span<const uint8_t> bytes);
torch::Tensor ReadPng(const std::string& path);

// Rounds to the nearest 8-bit level after clamping to [0, 1].
std::vector<uint8_t> EncodePng(const torch::Tensor& image);
void WritePng(const std::string& path, const torch::Tensor& image);

}  // namespace metacodec

#endif  // METACODEC_IMAGE_IO_H_
