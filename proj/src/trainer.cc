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

#include "metacodec/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "metacodec/error.h"

namespace metacodec {

void TrainOptions::Validate() const {
  METACODEC_CHECK(epochs >= 0, ErrorCode::kInvalidArgument, "epochs must be non-negative");
  METACODEC_CHECK(batch_size > 0, ErrorCode::kInvalidArgument, "batch size must be positive");
  METACODEC_CHECK(learning_rate > 0 && std::isfinite(learning_rate),
                  ErrorCode::kInvalidArgument, "learning rate must be positive");
}

std::vector<int64_t> EpochOrder(int64_t count, uint64_t seed, int epoch) {
  std::vector<int64_t> order(static_cast<size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(epoch));
  // Fisher-Yates with an explicit draw so the order is identical across
  // standard library implementations.
  for (int64_t i = count - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(rng() % static_cast<uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

namespace {

void Accumulate(EpochMetrics& acc, const RdTerms& t) {
  const auto sum = [](const torch::Tensor& v) { return v.detach().sum().item<double>(); };
  acc.loss += sum(t.total);
  acc.ms_ssim += sum(t.ms_ssim);
  acc.mse += sum(t.mse);
  acc.bpp += sum(t.bpp);
  acc.importance += sum(t.importance);
}

void Normalize(EpochMetrics& acc, int64_t n) {
  const double d = static_cast<double>(std::max<int64_t>(n, 1));
  acc.loss /= d;
  acc.ms_ssim /= d;
  acc.mse /= d;
  acc.bpp /= d;
  acc.importance /= d;
}

}  // namespace

std::vector<EpochMetrics> TrainStage1(CodecModel& model, const torch::Tensor& patches,
                                      const TrainOptions& options, const MetricsSink& sink) {
  options.Validate();
  METACODEC_CHECK(patches.defined() && patches.size(0) > 0, ErrorCode::kEmptyInput,
                  "training set is empty");
  torch::optim::Adam optimizer(model->parameters(),
                               torch::optim::AdamOptions(options.learning_rate));
  const auto& cfg = model->config();
  const int64_t count = patches.size(0);
  std::vector<EpochMetrics> history;
  model->train();
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const auto order = EpochOrder(count, options.seed, epoch);
    EpochMetrics acc;
    acc.epoch = epoch;
    for (int64_t start = 0; start < count; start += options.batch_size) {
      const int64_t end = std::min<int64_t>(start + options.batch_size, count);
      auto idx = torch::tensor(std::vector<int64_t>(order.begin() + start, order.begin() + end));
      auto x = patches.index_select(0, idx);
      auto a = Analyze(*model, x);
      auto e = EvaluateLatent(*model, x, a.masked, a.tau, cfg.codec.bits, cfg.weights);
      auto loss = e.terms.total.mean();
      METACODEC_CHECK(std::isfinite(loss.item<double>()), ErrorCode::kDivergence,
                      "training loss is not finite");
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      Accumulate(acc, e.terms);
    }
    Normalize(acc, count);
    history.push_back(acc);
    if (sink) sink(acc);
  }
  model->eval();
  return history;
}

EpochMetrics EvaluateModel(CodecModel& model, const torch::Tensor& images, int batch_size) {
  METACODEC_CHECK(images.defined() && images.size(0) > 0, ErrorCode::kEmptyInput,
                  "evaluation set is empty");
  torch::NoGradGuard no_grad;
  const auto& cfg = model->config();
  EpochMetrics acc;
  const int64_t count = images.size(0);
  for (int64_t start = 0; start < count; start += batch_size) {
    auto x = images.slice(0, start, std::min<int64_t>(start + batch_size, count));
    auto a = Analyze(*model, x);
    auto e = EvaluateLatent(*model, x, a.masked, a.tau, cfg.codec.bits, cfg.weights);
    Accumulate(acc, e.terms);
  }
  Normalize(acc, count);
  return acc;
}

void WriteMetricsCsvHeader(std::ostream& out) {
  out << "epoch,loss,ms_ssim,mse,bpp,importance\n";
}

void WriteMetricsCsvRow(std::ostream& out, const EpochMetrics& m) {
  out << m.epoch << ',' << m.loss << ',' << m.ms_ssim << ',' << m.mse << ',' << m.bpp << ','
      << m.importance << '\n';
}

}  // namespace metacodec
