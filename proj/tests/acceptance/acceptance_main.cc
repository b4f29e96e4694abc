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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Trained models are cached in --work-dir
// together with the wall-clock time their training took.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metacodec/bias.h"
#include "metacodec/checkpoint.h"
#include "metacodec/codec.h"
#include "metacodec/container.h"
#include "metacodec/error.h"
#include "metacodec/meta.h"
#include "metacodec/metrics.h"
#include "metacodec/pipeline.h"
#include "metacodec/prob_model.h"
#include "metacodec/range_coder.h"
#include "metacodec/synth.h"
#include "metacodec/tensor_coder.h"
#include "metacodec/trainer.h"

namespace metacodec {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Desk-scale recipe.
constexpr int kStage1Epochs = 60;
constexpr int kStage1Patches = 240;
constexpr double kStage1LearningRate = 1e-3;
constexpr int kMetaEpochs = 5;
constexpr int kMetaPatches = 120;
constexpr int kPatchSize = 64;
constexpr int kBiasClusters = 64;
constexpr int kCorpusSize = 20;
constexpr double kStage1LimitSeconds = 2 * 3600.0;
constexpr double kMetaLimitSeconds = 3600.0;
constexpr double kRoundTripLimitSeconds = 600.0;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Entropy coding properties.

SymbolTensor PatternSymbols(int c, int64_t h, int64_t w, int bits, uint64_t seed) {
  torch::manual_seed(seed);
  const int64_t top = (int64_t{1} << bits) - 1;
  switch (seed % 3) {
    case 0:
      return {torch::randint(0, top + 1, {1, c, h, w}, torch::kLong), bits};
    case 1: {
      auto base = torch::rand({1, c, (h + 1) / 2, (w + 1) / 2});
      auto up = base.repeat_interleave(2, 2).repeat_interleave(2, 3).narrow(2, 0, h).narrow(3, 0, w);
      return Quantize(up + 0.05 * torch::randn({1, c, h, w}), bits);
    }
    default:
      return {torch::full({1, c, h, w}, static_cast<int64_t>(seed % (top + 1)), torch::kLong), bits};
  }
}

std::vector<ProbModel> ModelPool(int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ProbModel> pool;
  for (int i = 0; i < count; ++i) {
    ProbModelConfig cfg;
    cfg.latent_channels = 1 + static_cast<int>(rng() % 8);
    cfg.num_scales = 1 + static_cast<int>(rng() % 3);
    cfg.mixtures = 1 + static_cast<int>(rng() % 5);
    cfg.context_channels = 1 + static_cast<int>(rng() % 8);
    torch::manual_seed(rng());
    ProbModel m(cfg);
    if (i % 4 == 3) {
      // Sharpened predictions exercise the probability floor.
      torch::NoGradGuard no_grad;
      for (auto& p : m->parameters()) p.mul_(8.0);
    }
    pool.push_back(m);
  }
  return pool;
}

Outcome EntropyRoundTrip() {
  const auto start = Clock::now();
  auto pool = ModelPool(64, 101);
  std::mt19937_64 rng(102);
  constexpr int kInstances = 10000;
  int failures = 0;
  torch::NoGradGuard no_grad;
  for (int t = 0; t < kInstances; ++t) {
    auto& model = pool[rng() % pool.size()];
    const int c = model->config().latent_channels;
    const int64_t h = 1 + static_cast<int64_t>(rng() % 16);
    const int64_t w = 1 + static_cast<int64_t>(rng() % 16);
    const int bits = 1 + static_cast<int>(rng() % 8);
    const auto z = PatternSymbols(c, h, w, bits, rng());
    try {
      const auto enc = EncodeTensor(*model, z);
      const auto back = DecodeTensor(*model, enc.payload, enc.checksum, h, w, bits);
      if (!torch::equal(back.symbols, z.symbols)) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  const double elapsed = Seconds(start);
  return {failures == 0 && elapsed < kRoundTripLimitSeconds,
          std::to_string(kInstances) + " instances, " + std::to_string(failures) +
              " failures, " + Fmt(elapsed) + " s (limit " + Fmt(kRoundTripLimitSeconds) + " s)"};
}

Outcome RateAgreement() {
  auto pool = ModelPool(40, 201);
  std::mt19937_64 rng(202);
  int violations = 0;
  double worst = 0.0;
  torch::NoGradGuard no_grad;
  for (int t = 0; t < 200; ++t) {
    auto& model = pool[rng() % pool.size()];
    const int c = model->config().latent_channels;
    const int64_t h = 4 + static_cast<int64_t>(rng() % 21);
    const int64_t w = 4 + static_cast<int64_t>(rng() % 21);
    const int bits = 1 + static_cast<int>(rng() % 8);
    const auto z = PatternSymbols(c, h, w, bits, rng());
    const double payload = 8.0 * static_cast<double>(EncodeTensor(*model, z).payload.size());
    const double rate = RateLoss(*model, Dequantize(z), z).item<double>();
    const double slack = 0.01 * rate + 64.0;
    worst = std::max(worst, std::abs(payload - rate) / slack);
    if (std::abs(payload - rate) > slack) ++violations;
  }
  return {violations == 0, "200 instances, " + std::to_string(violations) +
                               " outside 1% + 64 bits; worst |payload - rate| / slack = " +
                               Fmt(worst)};
}

Outcome CoderNearOptimality() {
  std::mt19937_64 rng(301);
  // Bernoulli source, P(0) = 0.9.
  constexpr size_t kBinary = 1000000;
  const double h09 = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
  std::vector<uint32_t> bin(kBinary);
  std::bernoulli_distribution one(0.1);
  for (auto& s : bin) s = one(rng) ? 1 : 0;
  const std::vector<double> p09 = {0.9, 0.1};
  std::vector<CdfTable> bin_cdfs(kBinary, QuantizeCdf(p09));
  const double bin_bits = 8.0 * static_cast<double>(AcEncode(bin, bin_cdfs).size());
  const double bin_ideal = static_cast<double>(kBinary) * h09;
  const bool bin_ok = std::abs(bin_bits - bin_ideal) <= 0.01 * bin_ideal + 32.0;
  // Uniform source over 256 symbols.
  constexpr size_t kUniform = 100000;
  std::vector<uint32_t> uni(kUniform);
  for (auto& s : uni) s = static_cast<uint32_t>(rng() % 256);
  std::vector<CdfTable> uni_cdfs(kUniform, QuantizeCdf(std::vector<double>(256, 1.0 / 256)));
  const double uni_bits = 8.0 * static_cast<double>(AcEncode(uni, uni_cdfs).size());
  const double uni_ideal = 8.0 * static_cast<double>(kUniform);
  const bool uni_ok = std::abs(uni_bits - uni_ideal) <= 0.01 * uni_ideal + 32.0;
  return {bin_ok && uni_ok,
          "H(0.9) = " + Fmt(h09, 6) + ": " + Fmt(bin_bits, 8) + " bits vs " + Fmt(bin_ideal, 8) +
              " ideal; uniform/256: " + Fmt(uni_bits, 8) + " vs " + Fmt(uni_ideal, 8)};
}

// ---------------------------------------------------------------------------
// Mask semantics and gradients.

Outcome MaskSemantics() {
  int64_t checked = 0, violations = 0;
  for (int c : {1, 3, 6, 8}) {
    std::vector<double> taus;
    for (int k = 0; k <= c; ++k) taus.push_back(static_cast<double>(k) / c);
    for (int i = 0; i <= 100000; ++i) taus.push_back(i / 100000.0);
    auto tau = torch::tensor(taus, torch::kDouble).view({1, 1, 1, -1});
    auto m = ExpandMask(QuantizeTau(tau, c), c).m.to(torch::kDouble).contiguous();
    auto ms = ExpandMaskStraightThrough(tau, c).detach().to(torch::kDouble);
    auto acc = m.accessor<double, 4>();
    for (size_t i = 0; i < taus.size(); ++i) {
      const auto col = static_cast<int64_t>(i);
      const double count = std::floor(c * taus[i] + 0.5);
      double sum = 0.0;
      bool prefix = true;
      for (int j = 0; j < c; ++j) {
        const double v = acc[0][j][0][col];
        sum += v;
        if (v != (j < count ? 1.0 : 0.0)) prefix = false;
      }
      ++checked;
      if (!prefix || sum != count) ++violations;
    }
    if (!torch::equal(m, ms)) ++violations;
  }
  return {violations == 0, std::to_string(checked) + " (tau, c) pairs, " +
                               std::to_string(violations) + " violations"};
}

double RelError(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-9 ? std::abs(a - b) : std::abs(a - b) / scale;
}

double FiniteDifference(const std::function<double()>& f, torch::Tensor t, int64_t i,
                        double eps = 1e-6) {
  torch::NoGradGuard no_grad;
  auto flat = t.view({-1});
  const double saved = flat[i].item<double>();
  flat[i] = saved + eps;
  const double plus = f();
  flat[i] = saved - eps;
  const double minus = f();
  flat[i] = saved;
  return (plus - minus) / (2 * eps);
}

Outcome GradientChecks() {
  double worst = 0.0;
  int64_t checked = 0;
  auto record = [&](double analytic, double numeric) {
    worst = std::max(worst, RelError(analytic, numeric));
    ++checked;
  };
  torch::manual_seed(501);
  const auto f64 = torch::TensorOptions().dtype(torch::kDouble);

  // Quantization passes the downstream gradient at the dequantized value.
  {
    auto y = torch::rand({1, 2, 3, 3}, f64).requires_grad_(true);
    auto w = torch::randn({1, 2, 3, 3}, f64);
    auto downstream = [&](const torch::Tensor& v) { return (torch::sin(3.0 * v) * w).sum(); };
    auto g = torch::autograd::grad({downstream(QuantizeStraightThrough(y, 5))}, {y})[0];
    auto at = Dequantize(Quantize(y.detach(), 5)).to(torch::kDouble).clone();
    for (int64_t i = 0; i < at.numel(); ++i) {
      record(g.view({-1})[i].item<double>(),
             FiniteDifference([&] { return downstream(at).item<double>(); }, at, i));
    }
  }
  // Mask relaxation, away from the kinks at integer c * tau.
  {
    const int c = 6;
    auto tau = torch::tensor({0.07, 0.29, 0.41, 0.55, 0.62, 0.93}, f64).view({1, 1, 2, 3});
    auto w = torch::randn({1, c, 2, 3}, f64);
    auto t = tau.clone().requires_grad_(true);
    auto g = torch::autograd::grad({(ExpandMaskStraightThrough(t, c) * w).sum()}, {t})[0];
    auto relaxed = [&] {
      double s = 0.0;
      for (int64_t i = 0; i < 6; ++i) {
        const double x = c * tau.view({-1})[i].item<double>();
        for (int k = 0; k < c; ++k) {
          s += w[0][k][i / 3][i % 3].item<double>() * std::clamp(x - k, 0.0, 1.0);
        }
      }
      return s;
    };
    for (int64_t i = 0; i < 6; ++i) record(g.view({-1})[i].item<double>(), FiniteDifference(relaxed, tau, i));
  }
  // Rate loss with respect to every probability model parameter and every
  // latent value on a 66-parameter model.
  {
    ProbModelConfig cfg{1, 2, 1, 1};
    ProbModel model(cfg);
    model->to(torch::kDouble);
    const auto z = PatternSymbols(1, 6, 6, 4, 1);
    auto latent = Dequantize(z).to(torch::kDouble).clone();
    auto rate = [&] { return RateLoss(*model, latent, z).item<double>(); };
    auto params = model->parameters();
    int64_t count = 0;
    for (const auto& p : params) count += p.numel();
    if (count > 100) return {false, "rate-check model has " + std::to_string(count) + " parameters"};
    auto lat = latent.clone().requires_grad_(true);
    auto inputs = params;
    inputs.push_back(lat);
    auto grads = torch::autograd::grad({RateLoss(*model, lat, z).sum()}, inputs, {}, false, false, true);
    for (size_t k = 0; k < params.size(); ++k) {
      for (int64_t i = 0; i < params[k].numel(); ++i) {
        const double an = grads[k].defined() ? grads[k].reshape({-1})[i].item<double>() : 0.0;
        record(an, FiniteDifference(rate, params[k], i));
      }
    }
    for (int64_t i = 0; i < latent.numel(); ++i) {
      record(grads.back().reshape({-1})[i].item<double>(), FiniteDifference(rate, latent, i));
    }
  }
  return {worst <= 1e-3, std::to_string(checked) + " partials, worst relative error " + Fmt(worst, 3) +
                             " (limit 1e-3)"};
}

// ---------------------------------------------------------------------------
// Meta-gradient oracle on a small nonlinear model:
//   y0 = sigmoid(E u) * m, decode(y) = V tanh(W y),
//   L(y) = |decode(y) - x|^2 + r * sum softplus(y).
struct TinyMeta {
  torch::Tensor E, W, V, u, x, m;
  double r = 0.1;

  explicit TinyMeta(uint64_t seed) {
    torch::manual_seed(seed);
    const auto o = torch::TensorOptions().dtype(torch::kDouble);
    E = torch::randn({4, 3}, o).requires_grad_(true);
    W = (0.7 * torch::randn({5, 4}, o)).requires_grad_(true);
    V = (0.7 * torch::randn({3, 5}, o)).requires_grad_(true);
    u = torch::randn({3}, o);
    x = torch::randn({3}, o);
    m = torch::tensor({1.0, 0.0, 1.0, 1.0}, o);
  }

  std::vector<torch::Tensor> Params() const { return {E, W, V}; }

  torch::Tensor Loss(const torch::Tensor& y) const {
    auto d = torch::mv(V, torch::tanh(torch::mv(W, y))) - x;
    return d.pow(2).sum() + r * torch::nn::functional::softplus(y).sum();
  }

  MetaTask Task() const {
    MetaTask t;
    t.initial_latent = [this] { return torch::sigmoid(torch::mv(E, u)) * m; };
    t.mask = [this] { return m; };
    t.inner_objective = [this](const torch::Tensor& y) { return Loss(y); };
    t.outer_objective = [this](const torch::Tensor& y) { return Loss(y); };
    return t;
  }

  // Plain-arithmetic unrolling with the hand-derived inner gradient.
  double Unrolled(int steps, double alpha) const {
    auto e = E.accessor<double, 2>();
    auto wa = W.accessor<double, 2>();
    auto va = V.accessor<double, 2>();
    std::vector<double> y(4);
    for (int i = 0; i < 4; ++i) {
      double s = 0;
      for (int j = 0; j < 3; ++j) s += e[i][j] * u[j].item<double>();
      y[i] = m[i].item<double>() / (1.0 + std::exp(-s));
    }
    auto forward = [&](const std::vector<double>& v, std::vector<double>& hidden,
                       std::vector<double>& resid) {
      hidden.assign(5, 0.0);
      resid.assign(3, 0.0);
      for (int a = 0; a < 5; ++a) {
        double s = 0;
        for (int j = 0; j < 4; ++j) s += wa[a][j] * v[j];
        hidden[a] = std::tanh(s);
      }
      double loss = 0.0;
      for (int b = 0; b < 3; ++b) {
        double s = -x[b].item<double>();
        for (int a = 0; a < 5; ++a) s += va[b][a] * hidden[a];
        resid[b] = s;
        loss += s * s;
      }
      for (double vj : v) loss += r * std::log1p(std::exp(vj));
      return loss;
    };
    std::vector<double> hidden, resid;
    for (int k = 0; k < steps; ++k) {
      forward(y, hidden, resid);
      std::vector<double> g(4, 0.0);
      for (int a = 0; a < 5; ++a) {
        double back = 0;
        for (int b = 0; b < 3; ++b) back += 2.0 * resid[b] * va[b][a];
        back *= 1.0 - hidden[a] * hidden[a];
        for (int j = 0; j < 4; ++j) g[j] += back * wa[a][j];
      }
      for (int j = 0; j < 4; ++j) {
        g[j] += r / (1.0 + std::exp(-y[j]));
        y[j] = (y[j] - alpha * g[j]) * m[j].item<double>();
      }
    }
    return forward(y, hidden, resid);
  }
};

Outcome MetaGradientOracle() {
  double worst = 0.0;
  int64_t checked = 0;
  const double alpha = 0.1;
  for (int steps : {1, 2}) {
    TinyMeta t(600 + static_cast<uint64_t>(steps));
    auto grads = MetaGradient(t.Task(), t.Params(), steps, alpha, true);
    auto params = t.Params();
    for (size_t k = 0; k < params.size(); ++k) {
      for (int64_t i = 0; i < params[k].numel(); ++i) {
        const double fd = FiniteDifference([&] { return t.Unrolled(steps, alpha); }, params[k], i);
        worst = std::max(worst, RelError(grads[k].reshape({-1})[i].item<double>(), fd));
        ++checked;
      }
    }
  }
  // First-order mode on a linear-quadratic instance: y0 = A u, inner
  // |C y - s|^2, outer |D y - q|^2. Treating every step as the identity
  // gives dA = (m * 2 D^T (D y_n - q)) u^T, dC = 0, dD = 2 (D y_n - q) y_n^T.
  torch::manual_seed(650);
  const auto o = torch::TensorOptions().dtype(torch::kDouble);
  auto A = torch::randn({4, 3}, o).requires_grad_(true);
  auto C = torch::randn({3, 4}, o).requires_grad_(true);
  auto D = torch::randn({2, 4}, o).requires_grad_(true);
  auto u = torch::randn({3}, o), s = torch::randn({3}, o), q = torch::randn({2}, o);
  auto m = torch::tensor({1.0, 1.0, 0.0, 1.0}, o);
  MetaTask task;
  task.initial_latent = [&] { return torch::mv(A, u) * m; };
  task.mask = [&] { return m; };
  task.inner_objective = [&](const torch::Tensor& y) { return (torch::mv(C, y) - s).pow(2).sum(); };
  task.outer_objective = [&](const torch::Tensor& y) { return (torch::mv(D, y) - q).pow(2).sum(); };
  auto fo = MetaGradient(task, {A, C, D}, 3, alpha, false);
  torch::NoGradGuard no_grad;
  auto y = torch::mv(A, u) * m;
  for (int k = 0; k < 3; ++k) y = (y - alpha * 2.0 * torch::mv(C.t(), torch::mv(C, y) - s)) * m;
  auto e = torch::mv(D, y) - q;
  const double first_order_error =
      std::max({(fo[0] - torch::outer(2.0 * torch::mv(D.t(), e) * m, u)).abs().max().item<double>(),
                fo[1].abs().max().item<double>(),
                (fo[2] - 2.0 * torch::outer(e, y)).abs().max().item<double>()});
  const bool pass = worst <= 1e-3 && first_order_error <= 1e-12;
  return {pass, std::to_string(checked) + " partials for n in {1,2}, worst relative error " +
                    Fmt(worst, 3) + "; first-order identity max abs deviation " +
                    Fmt(first_order_error, 3)};
}

// ---------------------------------------------------------------------------
// Trained-model criteria.

struct Banks {
  std::vector<CodecModel> stage1, baseline, meta;
  double stage1_seconds = 0.0;
  double meta_seconds = 0.0;
  bool cached = false;
};

std::vector<CodecModel> LoadAll(const fs::path& dir) {
  std::vector<CodecModel> out;
  for (int id = 0; id < static_cast<int>(kCodecLadder.size()); ++id) {
    out.push_back(LoadCheckpoint((dir / CodecBank::CheckpointName(id)).string()));
  }
  return out;
}

bool HaveAll(const fs::path& dir) {
  for (int id = 0; id < static_cast<int>(kCodecLadder.size()); ++id) {
    if (!fs::exists(dir / CodecBank::CheckpointName(id))) return false;
  }
  return true;
}

Banks PrepareBanks(const fs::path& work) {
  Banks b;
  const auto timings = work / "timings.json";
  if (HaveAll(work / "stage1") && HaveAll(work / "baseline") && HaveAll(work / "meta") &&
      fs::exists(timings)) {
    const auto bytes = ReadFileBytes(timings.string());
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    b.stage1 = LoadAll(work / "stage1");
    b.baseline = LoadAll(work / "baseline");
    b.meta = LoadAll(work / "meta");
    b.stage1_seconds = j.at("stage1_seconds");
    b.meta_seconds = j.at("meta_seconds");
    b.cached = true;
    return b;
  }
  for (const char* sub : {"stage1", "baseline", "meta"}) fs::create_directories(work / sub);
  const auto patches = SynthBatch(kStage1Patches, kPatchSize, 1);
  const auto meta_patches = SynthBatch(kMetaPatches, kPatchSize, 2);
  auto start = Clock::now();
  for (int id = 0; id < static_cast<int>(kCodecLadder.size()); ++id) {
    auto cfg = DeskModelConfig(id);
    cfg.provenance = "stage1 synthetic " + std::to_string(kStage1Patches) + "x" +
                     std::to_string(kPatchSize) + " epochs=" + std::to_string(kStage1Epochs);
    auto model = CreateModel(cfg, static_cast<uint64_t>(id));
    TrainOptions opt;
    opt.epochs = kStage1Epochs;
    opt.learning_rate = kStage1LearningRate;
    opt.seed = static_cast<uint64_t>(id);
    TrainStage1(model, patches, opt);
    SaveCheckpoint(model, (work / "stage1" / CodecBank::CheckpointName(id)).string());
    b.stage1.push_back(model);
    std::cerr << "stage-1 codec " << id << " done at " << Fmt(Seconds(start)) << " s\n";
  }
  b.stage1_seconds = Seconds(start);
  MetaConfig mc;
  mc.epochs = kMetaEpochs;
  for (int id = 0; id < static_cast<int>(kCodecLadder.size()); ++id) {
    // Plain fine-tuning with the same data, rate and epochs as the meta stage.
    auto base = CloneModel(b.stage1[static_cast<size_t>(id)]);
    TrainOptions opt;
    opt.epochs = mc.epochs;
    opt.learning_rate = mc.outer_lr;
    opt.batch_size = mc.batch_size;
    TrainStage1(base, meta_patches, opt);
    base->mutable_config().provenance += "; plain fine-tuning";
    SaveCheckpoint(base, (work / "baseline" / CodecBank::CheckpointName(id)).string());
    b.baseline.push_back(base);
  }
  start = Clock::now();
  for (int id = 0; id < static_cast<int>(kCodecLadder.size()); ++id) {
    auto meta = CloneModel(b.stage1[static_cast<size_t>(id)]);
    MetaFinetune(meta, meta_patches, mc);
    meta->mutable_config().provenance += "; meta n=4 second-order";
    SaveCheckpoint(meta, (work / "meta" / CodecBank::CheckpointName(id)).string());
    b.meta.push_back(meta);
    std::cerr << "meta codec " << id << " done at " << Fmt(Seconds(start)) << " s\n";
  }
  b.meta_seconds = Seconds(start);
  nlohmann::json j = {{"stage1_seconds", b.stage1_seconds}, {"meta_seconds", b.meta_seconds}};
  WriteTextAtomic(timings.string(), j.dump(2));
  return b;
}

// Mean over codecs and held-out images of the best 4-step loss drop across
// a small set of inner learning rates.
double MeanLossDrop(std::vector<CodecModel>& models, const torch::Tensor& held) {
  double total = 0.0;
  int count = 0;
  for (auto& model : models) {
    const auto& cfg = model->config();
    for (int64_t i = 0; i < held.size(0); ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (double lr : {0.03, 0.1, 0.3}) {
        const auto r = OverfitLatent(*model, held.slice(0, i, i + 1), 4, lr, cfg.weights, cfg.codec.bits);
        best = std::max(best, r.trace.front() - r.trace.back());
      }
      total += best;
      ++count;
    }
  }
  return total / count;
}

Outcome MetaDirection(Banks& banks) {
  const auto held = SynthBatch(20, kPatchSize, 777);
  const double pre = MeanLossDrop(banks.stage1, held);
  const double base = MeanLossDrop(banks.baseline, held);
  const double meta = MeanLossDrop(banks.meta, held);
  const bool timing = banks.stage1_seconds <= kStage1LimitSeconds &&
                      banks.meta_seconds <= kMetaLimitSeconds;
  std::ostringstream d;
  d << "mean 4-step loss drop: meta " << Fmt(meta) << " vs plain fine-tuning " << Fmt(base)
    << " (stage-1 checkpoint " << Fmt(pre) << ", meta " << (meta >= pre ? ">=" : "<")
    << " stage-1); stage-1 " << Fmt(banks.stage1_seconds) << " s, meta " << Fmt(banks.meta_seconds)
    << " s" << (banks.cached ? " (recorded)" : "");
  return {meta >= base && timing, d.str()};
}

struct CorpusImage {
  std::string id;
  torch::Tensor image;
};

std::vector<CorpusImage> Corpus() {
  std::vector<CorpusImage> out;
  for (int i = 0; i < kCorpusSize; ++i) {
    const int64_t h = 96 + 9 * (i % 5);
    const int64_t w = 128 + 7 * (i % 4);
    char name[16];
    std::snprintf(name, sizeof(name), "desk%02d", i);
    out.push_back({name, SynthImage(h, w, 5000 + static_cast<uint64_t>(i))});
  }
  return out;
}

double LumaMsSsim(const torch::Tensor& x, const torch::Tensor& y) {
  return Evaluate(x, y, 0).ms_ssim_y;
}

Outcome WeightedOverfitting(std::vector<CodecModel>& models, const std::vector<CorpusImage>& corpus) {
  constexpr double kTilt = 64.0;
  constexpr int kSteps = 10;
  int rate_down = 0, quality_up = 0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    auto& model = *models[i % models.size()];
    const auto& cfg = model.config();
    const auto& x = corpus[i].image;
    const auto [padded, pad] = PadImage(x, cfg.codec.downsample);
    torch::Tensor latent;
    {
      torch::NoGradGuard no_grad;
      latent = Analyze(model, padded).masked;
    }
    auto decode = [&](const torch::Tensor& l) {
      torch::NoGradGuard no_grad;
      return CropImage(model.decoder->forward(Dequantize(Quantize(l, cfg.codec.bits))), pad);
    };
    auto bpp = [&](const torch::Tensor& l) {
      return EncodeLatent(model, l, cfg.codec.bits, x.size(2), x.size(3), {}).bpp;
    };
    auto rate_weights = cfg.weights;
    rate_weights.ms_ssim /= kTilt;
    rate_weights.mse /= kTilt;
    auto quality_weights = cfg.weights;
    quality_weights.rate /= kTilt;
    const auto r = OverfitLatent(model, padded, kSteps, 0.1, rate_weights, cfg.codec.bits);
    const auto q = OverfitLatent(model, padded, kSteps, 0.1, quality_weights, cfg.codec.bits);
    if (bpp(r.latent) < bpp(latent)) ++rate_down;
    if (LumaMsSsim(x, decode(q.latent)) > LumaMsSsim(x, decode(latent))) ++quality_up;
  }
  const int n = static_cast<int>(corpus.size());
  return {rate_down * 10 >= n * 8 && quality_up * 10 >= n * 8,
          "rate-weighted lowers bpp on " + std::to_string(rate_down) + "/" + std::to_string(n) +
              ", distortion-weighted raises MS-SSIM on " + std::to_string(quality_up) + "/" +
              std::to_string(n) + " (need 80%)"};
}

Outcome BiasAdaptation(std::vector<CodecModel>& models, const CodebookSet& books,
                       const std::vector<CorpusImage>& corpus) {
  int64_t tiles = 0, worse_tiles = 0, patches = 0, worse_patches = 0;
  double delta_sum = 0.0;
  // Patch-level selection on held-out patches.
  const auto held = SynthBatch(20, kPatchSize, 778);
  for (size_t k = 0; k < models.size(); ++k) {
    auto& model = *models[k];
    const auto& book = books.at(static_cast<int>(k));
    for (int64_t i = 0; i < held.size(0); ++i) {
      const auto patch = held.slice(0, i, i + 1);
      const auto latent = QuantizedLatent(model, patch);
      const auto idx = SelectBiasCluster(model, patch, latent, book, model.config().weights);
      torch::NoGradGuard no_grad;
      const double base = DistortionLoss(patch, model.decoder->forward(latent), model.config().weights).item<double>();
      const auto biases = idx == kDefaultBiasIndex ? torch::Tensor() : book.centroids[idx];
      const double chosen = DistortionLoss(patch, model.decoder->forward(latent, biases), model.config().weights).item<double>();
      ++patches;
      if (chosen > base) ++worse_patches;
    }
  }
  // Tile-level selection on the desk corpus.
  for (size_t i = 0; i < corpus.size(); ++i) {
    auto& model = *models[i % models.size()];
    const auto& cfg = model.config();
    const auto& book = books.at(cfg.codec_id);
    const auto& x = corpus[i].image;
    const auto [padded, pad] = PadImage(x, cfg.codec.downsample);
    const auto latent_hat = QuantizedLatent(model, padded);
    const auto sel = SelectBiasIndices(model, padded, latent_hat, book, cfg.weights, kBiasTile);
    torch::NoGradGuard no_grad;
    const auto plain = model.decoder->forward(latent_hat);
    const auto adapted = DecodeWithBiasIndices(model, latent_hat, sel.indices, book, kBiasTile);
    const auto grid = MakeTileGrid(padded.size(2), padded.size(3), kBiasTile);
    for (int64_t r = 0; r < grid.rows; ++r) {
      for (int64_t c = 0; c < grid.cols; ++c) {
        auto tile = [&](const torch::Tensor& t) {
          return t.slice(2, r * kBiasTile, (r + 1) * kBiasTile).slice(3, c * kBiasTile, (c + 1) * kBiasTile);
        };
        const double a = DistortionLoss(tile(padded), tile(adapted), cfg.weights).item<double>();
        const double p = DistortionLoss(tile(padded), tile(plain), cfg.weights).item<double>();
        ++tiles;
        if (a > p) ++worse_tiles;
      }
    }
    delta_sum += LumaMsSsim(x, CropImage(adapted, pad)) - LumaMsSsim(x, CropImage(plain, pad));
  }
  const double mean_delta = delta_sum / static_cast<double>(corpus.size());
  return {worse_patches == 0 && worse_tiles == 0 && mean_delta >= 0.0,
          std::to_string(worse_patches) + "/" + std::to_string(patches) + " patches and " +
              std::to_string(worse_tiles) + "/" + std::to_string(tiles) +
              " tiles worse than default biases; mean MS-SSIM delta " + Fmt(mean_delta, 3)};
}

Outcome RateControl(std::vector<CodecModel>& models, const CodebookSet& books,
                    const std::vector<CorpusImage>& corpus, const fs::path& csv_path) {
  std::vector<CodecModel> copies;
  for (auto& m : models) copies.push_back(m);
  CodecBank bank(std::move(copies));
  int cases = 0, in_band = 0, flagged = 0, violations = 0, over_bound = 0, max_trials = 0;
  std::ostringstream csv;
  WriteMetricsHeader(csv);
  for (const auto& item : corpus) {
    const auto& x = item.image;
    for (double target : kTargetBitrates) {
      const RateTarget band{target};
      const auto result = Compress(x, band, bank, books);
      const auto parsed = ParseContainer(result.bytes);
      const double bpp = 8.0 * static_cast<double>(result.bytes.size()) /
                         static_cast<double>(x.size(2) * x.size(3));
      const bool best_effort = (parsed.header.flags & kFlagBestEffort) != 0;
      const bool inside = band.Contains(bpp);
      ++cases;
      in_band += inside;
      flagged += best_effort;
      if (!inside && !best_effort) ++violations;
      if (result.trials > result.trial_bound) ++over_bound;
      max_trials = std::max(max_trials, result.trials);
      const auto recon = Decompress(result.bytes, bank, books);
      auto r = Evaluate(x, recon, 8 * result.bytes.size());
      r.image_id = item.id;
      r.target_bpp = target;
      r.codec_id = parsed.header.codec_id;
      r.bits = parsed.header.bits;
      r.bits_payload = 8 * parsed.payload.size();
      r.bits_overhead = r.bits_total - r.bits_payload;
      r.best_effort = best_effort;
      WriteMetricsRow(csv, r);
    }
  }
  WriteTextAtomic(csv_path.string(), csv.str());
  return {violations == 0 && over_bound == 0,
          std::to_string(cases) + " cases: " + std::to_string(in_band) + " within +-15%, " +
              std::to_string(flagged) + " flagged best-effort, " + std::to_string(violations) +
              " unflagged misses; max trials " + std::to_string(max_trials) + ", " +
              std::to_string(over_bound) + " over the bound"};
}

}  // namespace
}  // namespace metacodec

int main(int argc, char** argv) {
  using namespace metacodec;
  CLI::App app{"metacodec acceptance suite"};
  std::string work_dir = "acceptance_work";
  bool fresh = false;
  app.add_option("--work-dir", work_dir, "directory for cached models and reports");
  app.add_flag("--fresh", fresh, "discard cached models and retrain");
  CLI11_PARSE(app, argc, argv);
  torch::set_num_threads(1);
  const fs::path work(work_dir);
  if (fresh) fs::remove_all(work);
  fs::create_directories(work);

  std::ofstream log(work / "acceptance_report.txt");
  int failed = 0;
  auto report = [&](int number, const std::string& name, const std::function<Outcome()>& run) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << " [" << number << "] " << name << ": " << o.detail << " ("
         << Fmt(Seconds(start), 3) << " s)";
    std::cout << line.str() << std::endl;
    log << line.str() << std::endl;
  };

  report(1, "entropy round-trip", EntropyRoundTrip);
  report(2, "rate agreement", RateAgreement);
  report(3, "coder near-optimality", CoderNearOptimality);
  report(4, "mask semantics", MaskSemantics);
  report(5, "straight-through and rate-loss gradients", GradientChecks);
  report(6, "meta-gradient oracle", MetaGradientOracle);

  Banks banks;
  CodebookSet books;
  std::string setup_error;
  try {
    banks = PrepareBanks(work);
    const auto books_path = work / "books.bin";
    if (fs::exists(books_path)) {
      books = LoadCodebooks(books_path.string());
    } else {
      const auto patches = SynthBatch(kStage1Patches, kPatchSize, 1);
      for (size_t id = 0; id < banks.meta.size(); ++id) {
        auto& m = *banks.meta[id];
        books[static_cast<int>(id)] = BuildBiasClusters(m, patches, kBiasClusters, BiasOverfitOptions{},
                                                        m.config().weights, 7);
      }
      SaveCodebooks(books, books_path.string());
    }
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  const auto corpus = Corpus();
  auto needs_models = [&](const std::function<Outcome()>& run) {
    return [&, run]() -> Outcome {
      if (!setup_error.empty()) return {false, "model preparation failed: " + setup_error};
      return run();
    };
  };
  report(7, "meta fine-tuning improves overfitting", needs_models([&] { return MetaDirection(banks); }));
  report(8, "weighted overfitting direction",
         needs_models([&] { return WeightedOverfitting(banks.meta, corpus); }));
  report(9, "bias adaptation", needs_models([&] { return BiasAdaptation(banks.meta, books, corpus); }));
  report(10, "rate control",
         needs_models([&] { return RateControl(banks.meta, books, corpus, work / "rate_control.csv"); }));

  const std::string summary = failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED";
  std::cout << summary << std::endl;
  log << summary << std::endl;
  return failed == 0 ? 0 : 1;
}
