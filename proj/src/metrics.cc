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

#include "metacodec/metrics.h"

#include <cmath>
#include <iomanip>

#include "metacodec/error.h"
#include "metacodec/ms_ssim.h"

namespace metacodec {

double Psnr(const torch::Tensor& x, const torch::Tensor& x_hat) {
  METACODEC_CHECK(x.sizes() == x_hat.sizes(), ErrorCode::kShapeMismatch,
                  "images must have equal dimensions");
  const double mse = (x.to(torch::kDouble) - x_hat.to(torch::kDouble)).pow(2).mean().item<double>();
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

MetricsRecord Evaluate(const torch::Tensor& x, const torch::Tensor& x_hat, uint64_t bits_total) {
  METACODEC_CHECK(x.dim() == 4 && x.size(0) == 1 && x.sizes() == x_hat.sizes(),
                  ErrorCode::kShapeMismatch, "images must be 1 x 3 x H x W with equal dimensions");
  torch::NoGradGuard no_grad;
  MetricsRecord r;
  r.bits_total = bits_total;
  r.bpp = static_cast<double>(bits_total) / static_cast<double>(x.size(2) * x.size(3));
  auto xd = x.to(torch::kDouble);
  auto yd = x_hat.to(torch::kDouble);
  r.ms_ssim_y = MsSsim(RgbToLuma(xd), RgbToLuma(yd)).item<double>();
  r.psnr = Psnr(xd, yd);
  return r;
}

void WriteMetricsHeader(std::ostream& out) {
  out << "image_id,target_bpp,codec_id,bits,bpp,ms_ssim_y,psnr,bits_total,bits_payload,"
         "bits_overhead,best_effort\n";
}

void WriteMetricsRow(std::ostream& out, const MetricsRecord& r) {
  out << r.image_id << ',' << r.target_bpp << ',' << r.codec_id << ',' << r.bits << ','
      << std::fixed << std::setprecision(6) << r.bpp << ',' << r.ms_ssim_y << ',' << r.psnr
      << std::defaultfloat << ',' << r.bits_total << ',' << r.bits_payload << ','
      << r.bits_overhead << ',' << (r.best_effort ? 1 : 0) << '\n';
}

}  // namespace metacodec
