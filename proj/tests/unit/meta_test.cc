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

#include "metacodec/meta.h"

#include <cstring>
#include <vector>

#include <doctest.h>

#include "metacodec/error.h"
#include "test_util.h"

namespace metacodec {
namespace {

using testing::CentralDifference;
using testing::RelativeError;
using testing::TinyConfig;

TEST_CASE("one step on y^2 from 1 with rate 0.1 lands on 0.8") {
  auto y = torch::ones({1}, torch::kDouble);
  auto sq = [](const torch::Tensor& v) { return (v * v).sum(); };
  for (auto mode : {InnerGradient::kDetached, InnerGradient::kFirstOrder,
                    InnerGradient::kSecondOrder}) {
    auto out = AdaptLatent(sq, y, {}, 1, 0.1, mode);
    CHECK(out.item<double>() == doctest::Approx(0.8).epsilon(1e-15));
  }
  auto two = AdaptLatent(sq, y, {}, 2, 0.1, InnerGradient::kDetached);
  CHECK(two.item<double>() == doctest::Approx(0.64).epsilon(1e-15));
}

TEST_CASE("zero steps return the initial latent") {
  auto y = torch::rand({2, 3});
  std::vector<double> trace;
  auto out = AdaptLatent([](const torch::Tensor& v) { return v.sum(); }, y, {}, 0, 0.5,
                         InnerGradient::kDetached, &trace);
  CHECK(torch::equal(out, y));
  CHECK(trace.empty());
}

TEST_CASE("the mask is reapplied after each step and the trace records each loss") {
  auto y = torch::tensor({1.0, 2.0, 3.0}, torch::kDouble);
  auto m = torch::tensor({1.0, 0.0, 1.0}, torch::kDouble);
  std::vector<double> trace;
  auto out = AdaptLatent([](const torch::Tensor& v) { return (v * v).sum(); }, y * m, m, 2,
                         0.25, InnerGradient::kDetached, &trace);
  // Each step halves the kept entries.
  CHECK(torch::allclose(out, torch::tensor({0.25, 0.0, 0.75}, torch::kDouble)));
  REQUIRE(trace.size() == 2);
  CHECK(trace[0] == doctest::Approx(10.0));
  CHECK(trace[1] == doctest::Approx(2.5));
}

// A small differentiable problem with parameters in the initial latent, the
// inner objective and the outer objective:
//   y0 = A u,  inner(y) = |C y - t|^2,  outer(y) = |D y - s|^2.
struct Toy {
  torch::Tensor A, C, D, u, t, s, m;

  explicit Toy(uint64_t seed) {
    torch::manual_seed(seed);
    auto opts = torch::TensorOptions().dtype(torch::kDouble);
    A = (0.5 * torch::randn({4, 3}, opts)).requires_grad_(true);
    C = (0.5 * torch::randn({3, 4}, opts)).requires_grad_(true);
    D = (0.5 * torch::randn({2, 4}, opts)).requires_grad_(true);
    u = torch::randn({3}, opts);
    t = torch::randn({3}, opts);
    s = torch::randn({2}, opts);
    m = torch::tensor({1.0, 1.0, 0.0, 1.0}, opts);
  }

  std::vector<torch::Tensor> Params() const { return {A, C, D}; }

  MetaTask Task() const {
    MetaTask task;
    task.initial_latent = [this] { return torch::mv(A, u) * m; };
    task.mask = [this] { return m; };
    task.inner_objective = [this](const torch::Tensor& y) {
      return (torch::mv(C, y) - t).pow(2).sum();
    };
    task.outer_objective = [this](const torch::Tensor& y) {
      return (torch::mv(D, y) - s).pow(2).sum();
    };
    return task;
  }

  // Plain-loop evaluation of the unrolled objective with analytic inner
  // gradients 2 C^T (C y - t).
  double Unrolled(int steps, double alpha) const {
    auto a = A.accessor<double, 2>();
    auto c = C.accessor<double, 2>();
    auto d = D.accessor<double, 2>();
    auto uu = u.accessor<double, 1>();
    auto tt = t.accessor<double, 1>();
    auto ss = s.accessor<double, 1>();
    auto mm = m.accessor<double, 1>();
    std::vector<double> y(4, 0.0);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 3; ++j) y[i] += a[i][j] * uu[j];
      y[i] *= mm[i];
    }
    for (int k = 0; k < steps; ++k) {
      std::vector<double> r(3, 0.0), g(4, 0.0);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) r[i] += c[i][j] * y[j];
        r[i] -= tt[i];
      }
      for (int j = 0; j < 4; ++j) {
        for (int i = 0; i < 3; ++i) g[j] += 2.0 * c[i][j] * r[i];
      }
      for (int j = 0; j < 4; ++j) y[j] = (y[j] - alpha * g[j]) * mm[j];
    }
    double out = 0.0;
    for (int i = 0; i < 2; ++i) {
      double e = -ss[i];
      for (int j = 0; j < 4; ++j) e += d[i][j] * y[j];
      out += e * e;
    }
    return out;
  }
};

TEST_CASE("second-order meta-gradient matches finite differences of the unrolled loss") {
  for (int steps : {1, 2, 3}) {
    Toy toy(10 + static_cast<uint64_t>(steps));
    const double alpha = 0.1;
    double value = 0.0;
    auto grads = MetaGradient(toy.Task(), toy.Params(), steps, alpha, true, &value);
    CHECK(value == doctest::Approx(toy.Unrolled(steps, alpha)).epsilon(1e-12));
    auto params = toy.Params();
    for (size_t p = 0; p < params.size(); ++p) {
      for (int64_t i = 0; i < params[p].numel(); ++i) {
        const double fd = CentralDifference([&] { return toy.Unrolled(steps, alpha); },
                                            params[p], i, 1e-6);
        const double an = grads[p].reshape({-1})[i].item<double>();
        INFO("steps " << steps << " param " << p << " index " << i);
        CHECK(std::abs(an - fd) <= 1e-6 + 1e-4 * std::abs(fd));
      }
    }
  }
}

TEST_CASE("first-order meta-gradient treats each step as the identity map") {
  Toy toy(21);
  const int steps = 2;
  const double alpha = 0.1;
  auto grads = MetaGradient(toy.Task(), toy.Params(), steps, alpha, false);
  torch::Tensor yn;
  {
    torch::NoGradGuard no_grad;
    yn = AdaptLatent(toy.Task().inner_objective, torch::mv(toy.A, toy.u) * toy.m, toy.m, steps,
                     alpha, InnerGradient::kDetached);
    auto e = torch::mv(toy.D, yn) - toy.s;
    auto dy = 2.0 * torch::mv(toy.D.t(), e) * toy.m;
    CHECK(torch::allclose(grads[0], torch::outer(dy, toy.u), 1e-12, 1e-12));
    CHECK(grads[1].abs().max().item<double>() == 0.0);
    CHECK(torch::allclose(grads[2], 2.0 * torch::outer(e, yn), 1e-12, 1e-12));
  }
}

TEST_CASE("with a zero inner rate both orders agree") {
  Toy toy(31);
  auto a = MetaGradient(toy.Task(), toy.Params(), 3, 0.0, true);
  auto b = MetaGradient(toy.Task(), toy.Params(), 3, 0.0, false);
  for (size_t i = 0; i < a.size(); ++i) CHECK(torch::allclose(a[i], b[i], 1e-14, 1e-14));
}

std::vector<std::vector<char>> Snapshot(CodecModel& model) {
  std::vector<std::vector<char>> out;
  for (const auto& p : model->parameters()) {
    auto c = p.detach().contiguous();
    const char* data = static_cast<const char*>(c.data_ptr());
    out.emplace_back(data, data + c.nbytes());
  }
  return out;
}

TEST_CASE("latent overfitting leaves the networks bit-identical") {
  auto cfg = TinyConfig();
  auto model = CreateModel(cfg, 5);
  auto before = Snapshot(model);
  auto image = testing::RandomImage(1, 8, 8, 6);
  auto r = OverfitLatent(*model, image, 3, 0.1, cfg.weights, cfg.codec.bits);
  CHECK(Snapshot(model) == before);
  for (const auto& p : model->parameters()) CHECK_FALSE(p.grad().defined());
  CHECK(r.trace.size() == 4);
  CHECK_FALSE(r.latent.requires_grad());
  // Masked-out positions stay zero.
  CHECK((r.latent * (1 - r.mask)).abs().max().item<float>() == 0.0f);
}

TEST_CASE("overfitting with zero steps records only the starting loss") {
  auto cfg = TinyConfig();
  auto model = CreateModel(cfg, 5);
  auto image = testing::RandomImage(1, 8, 8, 7);
  auto r = OverfitLatent(*model, image, 0, 0.1, cfg.weights, cfg.codec.bits);
  REQUIRE(r.trace.size() == 1);
  auto a = Analyze(*model, image);
  CHECK(torch::equal(r.latent, a.masked));
}

TEST_CASE("a zero outer rate leaves the model unchanged") {
  auto cfg = TinyConfig();
  auto model = CreateModel(cfg, 8);
  auto before = Snapshot(model);
  MetaConfig meta;
  meta.outer_lr = 0.0;
  meta.inner_iterations = 2;
  meta.epochs = 1;
  meta.batch_size = 2;
  auto history = MetaFinetune(model, testing::RandomImage(3, 8, 8, 9), meta);
  REQUIRE(history.size() == 1);
  CHECK(std::isfinite(history[0].outer_loss));
  CHECK(Snapshot(model) == before);
}

TEST_CASE("a positive outer rate moves the model") {
  auto cfg = TinyConfig();
  auto model = CreateModel(cfg, 8);
  auto before = Snapshot(model);
  MetaConfig meta;
  meta.outer_lr = 1e-3;
  meta.inner_iterations = 1;
  meta.epochs = 1;
  meta.batch_size = 2;
  MetaFinetune(model, testing::RandomImage(2, 8, 8, 9), meta);
  CHECK(Snapshot(model) != before);
}

TEST_CASE("meta configuration is validated") {
  MetaConfig c;
  c.inner_iterations = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = MetaConfig{};
  c.inner_lr = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = MetaConfig{};
  c.outer_lr = -1;
  CHECK_THROWS_AS(c.Validate(), Error);
  auto model = CreateModel(TinyConfig(), 1);
  CHECK_THROWS_AS(MetaFinetune(model, torch::empty({0, 3, 8, 8}), MetaConfig{}), Error);
}

}  // namespace
}  // namespace metacodec
