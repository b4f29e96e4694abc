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

#ifndef METACODEC_TRAINER_H_
#define METACODEC_TRAINER_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include <torch/torch.h>

#include "metacodec/model.h"

namespace metacodec {

struct TrainOptions {
  int epochs = 1;
  int batch_size = 12;
  double learning_rate = 1e-4;
  uint64_t seed = 0;

  void Validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double ms_ssim = 0.0;
  double mse = 0.0;
  double bpp = 0.0;
  double importance = 0.0;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

// Batch order for one epoch, drawn from a generator seeded by (seed, epoch).
std::vector<int64_t> EpochOrder(int64_t count, uint64_t seed, int epoch);

// Joint training of all four networks on the RD loss with Adam.
std::vector<EpochMetrics> TrainStage1(CodecModel& model, const torch::Tensor& patches,
                                      const TrainOptions& options,
                                      const MetricsSink& sink = {});

// Mean RD terms of `model` over `images` without any adaptation.
EpochMetrics EvaluateModel(CodecModel& model, const torch::Tensor& images, int batch_size);

void WriteMetricsCsvHeader(std::ostream& out);
void WriteMetricsCsvRow(std::ostream& out, const EpochMetrics& m);

}  // namespace metacodec

#endif  // METACODEC_TRAINER_H_
