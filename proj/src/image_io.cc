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

#include "metacodec/image_io.h"

#include <cstring>

#include <png.h>

#include "metacodec/checkpoint.h"
#include "metacodec/error.h"

namespace metacodec {

torch::Tensor DecodePng(std::span<const uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  METACODEC_CHECK(png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) != 0,
                  ErrorCode::kIo, std::string("cannot parse PNG: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> pixels(PNG_IMAGE_SIZE(image));
  const bool ok = png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr) != 0;
  const std::string message = image.message;
  png_image_free(&image);
  METACODEC_CHECK(ok, ErrorCode::kIo, "cannot decode PNG: " + message);
  const int64_t h = image.height, w = image.width;
  auto t = torch::from_blob(pixels.data(), {h, w, 3}, torch::kUInt8).clone();
  return t.permute({2, 0, 1}).unsqueeze(0).to(torch::kFloat).div(255.0).contiguous();
}

torch::Tensor ReadPng(const std::string& path) { return DecodePng(ReadFileBytes(path)); }

std::vector<uint8_t> EncodePng(const torch::Tensor& image) {
  METACODEC_CHECK(image.dim() == 4 && image.size(0) == 1 && image.size(1) == 3,
                  ErrorCode::kShapeMismatch, "PNG output expects a 1 x 3 x H x W tensor");
  auto hwc = (image.detach().to(torch::kCPU, torch::kFloat).clamp(0.0, 1.0) * 255.0)
                 .round()
                 .to(torch::kUInt8)
                 .squeeze(0)
                 .permute({1, 2, 0})
                 .contiguous();
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.size(3));
  png.height = static_cast<png_uint_32>(image.size(2));
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  METACODEC_CHECK(png_image_write_to_memory(&png, nullptr, &size, 0, hwc.data_ptr<uint8_t>(), 0,
                                            nullptr) != 0,
                  ErrorCode::kIo, std::string("cannot size PNG: ") + png.message);
  std::vector<uint8_t> out(size);
  METACODEC_CHECK(png_image_write_to_memory(&png, out.data(), &size, 0, hwc.data_ptr<uint8_t>(),
                                            0, nullptr) != 0,
                  ErrorCode::kIo, std::string("cannot encode PNG: ") + png.message);
  out.resize(size);
  return out;
}

void WritePng(const std::string& path, const torch::Tensor& image) {
  WriteFileAtomic(path, EncodePng(image));
}

}  // namespace metacodec
