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

#ifndef METACODEC_METRICS_H_
#define METACODEC_METRICS_H_

#include <cstdint>
#include <ostream>
#include <string>

#include <torch/torch.h>

namespace metacodec {

constexpr double kPsnrCap = 100.0;

struct MetricsRecord {
  std::string image_id;
  double target_bpp = 0.0;
  int codec_id = -1;
  int bits = 0;
  double bpp = 0.0;
  double ms_ssim_y = 0.0;
  double psnr = 0.0;
  uint64_t bits_total = 0;
  uint64_t bits_payload = 0;
  uint64_t bits_overhead = 0;
  bool best_effort = false;
};

// Peak signal-to-noise ratio over RGB in dB for images in [0, 1], capped.
double Psnr(const torch::Tensor& x, const torch::Tensor& x_hat);

// bpp uses the pixel count of `x`; MS-SSIM is computed on BT.601 luma.
MetricsRecord Evaluate(const torch::Tensor& x, const torch::Tensor& x_hat, uint64_t bits_total);

void WriteMetricsHeader(std::ostream& out);
void WriteMetricsRow(std::ostream& out, const MetricsRecord& r);

}  // namespace metacodec

#endif  // METACODEC_METRICS_H_
