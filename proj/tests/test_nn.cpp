// Copyright 2026 The sltlab Authors
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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "sltlab/nn.hpp"

using namespace sltlab;

namespace {

MlpArchitecture small_tanh() {
  MlpArchitecture a;
  a.input_dim = 3;
  a.hidden_layers = {4};
  a.output_classes = 3;
  a.activation = Activation::tanh;
  return a;
}

Batch random_batch(std::size_t m, std::size_t dim, std::size_t classes,
                   std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Batch b;
  b.inputs = Matrix(m, dim);
  for (auto& v : b.inputs.data) v = g(rng);
  b.labels.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    b.labels[i] = static_cast<int>(i % classes);
  return b;
}

}  // namespace

TEST_CASE("parameter count and layer offsets") {
  MlpArchitecture a;
  a.input_dim = 2;
  a.hidden_layers = {3};
  a.output_classes = 2;
  CHECK(a.param_count() == (2 + 1) * 3 + (3 + 1) * 2);  // 17
  CHECK(a.num_layers() == 2);
  CHECK(a.layer_input_dim(0) == 2);
  CHECK(a.layer_output_dim(0) == 3);
  CHECK(a.layer_input_dim(1) == 3);
  CHECK(a.layer_output_dim(1) == 2);

  MlpModel m(a);
  CHECK(m.weight_offset(0) == 0);
  CHECK(m.bias_offset(0) == 6);
  CHECK(m.weight_offset(1) == 9);
  CHECK(m.bias_offset(1) == 15);
  CHECK(m.dim() == 17);
}

TEST_CASE("architecture validation") {
  MlpArchitecture a;
  a.input_dim = 0;
  a.output_classes = 2;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a.input_dim = 4;
  a.output_classes = 1;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a.output_classes = 2;
  a.hidden_layers = {0};
  CHECK_THROWS_AS(a.validate(), ConfigError);
  CHECK_THROWS_AS(activation_from_string("sigmoid"), ConfigError);
  CHECK(activation_from_string("relu") == Activation::relu);
}

TEST_CASE("zero parameters give the uniform distribution") {
  MlpArchitecture a;
  a.input_dim = 5;
  a.hidden_layers = {7};
  a.output_classes = 4;
  MlpModel m(a);  // all-zero params
  const Batch b = random_batch(6, 5, 4, 1);
  const Matrix lp = forward(m, b);
  for (double v : lp.data)
    CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-14));
  CHECK(nll_loss(m, b) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("log-softmax on a hand-worked affine model") {
  // One affine layer, weights [[1,-1],[0.5,0.25]], biases [0.1,-0.2],
  // input (0.3, 0.7) -> logits (-0.3, 0.125). Log-softmax values were
  // computed separately at full precision.
  MlpArchitecture a;
  a.input_dim = 2;
  a.output_classes = 2;
  MlpModel m(a, {1.0, -1.0, 0.5, 0.25, 0.1, -0.2});
  Batch b;
  b.inputs = Matrix(1, 2);
  b.inputs.data = {0.3, 0.7};
  b.labels = {0};
  const Matrix lp = forward(m, b);
  CHECK(lp.at(0, 0) == doctest::Approx(-0.92805740017280047).epsilon(1e-15));
  CHECK(lp.at(0, 1) == doctest::Approx(-0.50305740017280054).epsilon(1e-15));
  CHECK(nll_loss(m, b) ==
        doctest::Approx(0.92805740017280047).epsilon(1e-15));
  b.labels = {1};
  CHECK(nll_loss(m, b) ==
        doctest::Approx(0.50305740017280054).epsilon(1e-15));
}

TEST_CASE("log-softmax stays finite for huge logits") {
  MlpArchitecture a;
  a.input_dim = 1;
  a.output_classes = 2;
  MlpModel m(a, {500.0, -500.0, 0.0, 0.0});
  Batch b;
  b.inputs = Matrix(1, 1);
  b.inputs.data = {2.0};
  b.labels = {0};
  const Matrix lp = forward(m, b);
  CHECK(lp.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::isfinite(lp.at(0, 1)));
  CHECK(nll_loss(m, b) >= 0.0);
}

TEST_CASE("rows of exp(logprobs) sum to one") {
  const auto arch = small_tanh();
  const MlpModel m = MlpModel::random_init(arch, 3);
  const Batch b = random_batch(8, 3, 3, 4);
  const Matrix lp = forward(m, b);
  for (std::size_t i = 0; i < lp.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < lp.cols; ++j) s += std::exp(lp.at(i, j));
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central finite differences") {
  const auto arch = small_tanh();
  const MlpModel m = MlpModel::random_init(arch, 7);
  const Batch b = random_batch(5, 3, 3, 8);
  const ParamVector g = grad(m, b);

  const double h = 1e-5;
  ParamVector w = m.params();
  for (std::size_t k = 0; k < w.size(); ++k) {
    ParamVector wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    const double fd = (nll_loss(MlpModel(arch, wp), b) -
                       nll_loss(MlpModel(arch, wm), b)) /
                      (2.0 * h);
    const double denom = std::max(std::abs(fd), 1e-4);
    CHECK(std::abs(g[k] - fd) / denom < 1e-5);
  }
}

TEST_CASE("per-example gradients average to the batch gradient") {
  const auto arch = small_tanh();
  const MlpModel m = MlpModel::random_init(arch, 11);
  const Batch b = random_batch(6, 3, 3, 12);
  const ParamVector g = grad(m, b);
  const Matrix pg = per_example_grads(m, b);
  REQUIRE(pg.rows == 6);
  REQUIRE(pg.cols == g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pg.rows; ++i) acc += pg.at(i, k);
    CHECK(acc / 6.0 == doctest::Approx(g[k]).epsilon(1e-13));
  }
}

TEST_CASE("hvp matches finite differences of the gradient") {
  const auto arch = small_tanh();
  const MlpModel m = MlpModel::random_init(arch, 21);
  const Batch b = random_batch(5, 3, 3, 22);

  auto rng = make_rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ParamVector v(m.dim());
  for (auto& x : v) x = gauss(rng);

  const ParamVector hv = hvp(m, b, v);

  const double h = 1e-5;
  ParamVector wp = m.params(), wm = m.params();
  for (std::size_t k = 0; k < v.size(); ++k) {
    wp[k] += h * v[k];
    wm[k] -= h * v[k];
  }
  const ParamVector gp = grad(MlpModel(arch, wp), b);
  const ParamVector gm = grad(MlpModel(arch, wm), b);

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double fd = (gp[k] - gm[k]) / (2.0 * h);
    num += (hv[k] - fd) * (hv[k] - fd);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) < 1e-5);
}

TEST_CASE("hvp matches finite differences on a relu net") {
  MlpArchitecture arch = small_tanh();
  arch.activation = Activation::relu;
  const MlpModel m = MlpModel::random_init(arch, 31);
  const Batch b = random_batch(5, 3, 3, 32);

  auto rng = make_rng(33);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ParamVector v(m.dim());
  for (auto& x : v) x = gauss(rng);
  const ParamVector hv = hvp(m, b, v);

  const double h = 1e-6;  // small enough not to cross a relu kink here
  ParamVector wp = m.params(), wm = m.params();
  for (std::size_t k = 0; k < v.size(); ++k) {
    wp[k] += h * v[k];
    wm[k] -= h * v[k];
  }
  const ParamVector gp = grad(MlpModel(arch, wp), b);
  const ParamVector gm = grad(MlpModel(arch, wm), b);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double fd = (gp[k] - gm[k]) / (2.0 * h);
    num += (hv[k] - fd) * (hv[k] - fd);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("hvp is symmetric and linear") {
  const auto arch = small_tanh();
  const MlpModel m = MlpModel::random_init(arch, 41);
  const Batch b = random_batch(4, 3, 3, 42);

  auto rng = make_rng(43);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ParamVector u(m.dim()), v(m.dim());
  for (auto& x : u) x = gauss(rng);
  for (auto& x : v) x = gauss(rng);

  const ParamVector hu = hvp(m, b, u);
  const ParamVector hv = hvp(m, b, v);
  double uhv = 0.0, vhu = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    uhv += u[k] * hv[k];
    vhu += v[k] * hu[k];
  }
  CHECK(std::abs(uhv - vhu) <= 1e-10 * std::max(1.0, std::abs(uhv)));

  ParamVector mix(m.dim());
  for (std::size_t k = 0; k < u.size(); ++k) mix[k] = 2.0 * u[k] - 3.0 * v[k];
  const ParamVector hmix = hvp(m, b, mix);
  for (std::size_t k = 0; k < u.size(); ++k)
    CHECK(hmix[k] ==
          doctest::Approx(2.0 * hu[k] - 3.0 * hv[k]).epsilon(1e-10));
}

TEST_CASE("a dead relu unit has zero gradient and curvature") {
  MlpArchitecture a;
  a.input_dim = 2;
  a.hidden_layers = {2};
  a.output_classes = 2;
  a.activation = Activation::relu;
  // Unit 0 is alive, unit 1 has zero weights and a large negative bias, so
  // it never fires on any input.
  ParamVector w = {0.7, -0.4,   // unit 0 weights
                   0.0, 0.0,    // unit 1 weights
                   0.1, -50.0,  // hidden biases
                   0.5, 0.3, -0.2, 0.8,  // output weights
                   0.0, 0.0};
  const MlpModel m(a, w);
  const Batch b = random_batch(6, 2, 2, 51);

  const ParamVector g = grad(m, b);
  // dead unit's input weights (indices 2,3), its bias (5), and the output
  // weights reading it (7, 9) all have zero gradient
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.0);
  CHECK(g[5] == 0.0);
  CHECK(g[7] == 0.0);
  CHECK(g[9] == 0.0);
  CHECK(g[0] != 0.0);

  // curvature along the dead unit's input weight direction is exactly zero
  ParamVector e(m.dim(), 0.0);
  e[2] = 1.0;
  const ParamVector he = hvp(m, b, e);
  for (double x : he) CHECK(x == 0.0);
}

TEST_CASE("empirical fisher identities") {
  const auto arch = small_tanh();
  const MlpModel m = MlpModel::random_init(arch, 61);
  const Batch b = random_batch(5, 3, 3, 62);
  const Matrix pg = per_example_grads(m, b);

  auto rng = make_rng(63);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ParamVector v(m.dim());
  for (auto& x : v) x = gauss(rng);

  // matrix-free product equals the explicit (1/m) sum_i (g_i . v) g_i
  const ParamVector fv = fisher_vector_product(m, b, v);
  ParamVector expect(m.dim(), 0.0);
  for (std::size_t i = 0; i < pg.rows; ++i) {
    double d = 0.0;
    for (std::size_t k = 0; k < pg.cols; ++k) d += pg.at(i, k) * v[k];
    for (std::size_t k = 0; k < pg.cols; ++k)
      expect[k] += d * pg.at(i, k) / static_cast<double>(pg.rows);
  }
  for (std::size_t k = 0; k < v.size(); ++k)
    CHECK(fv[k] == doctest::Approx(expect[k]).epsilon(1e-12));

  // positive semidefinite and trace = mean squared gradient norm
  double quad = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) quad += v[k] * fv[k];
  CHECK(quad >= 0.0);
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < pg.rows; ++i)
    for (std::size_t k = 0; k < pg.cols; ++k)
      mean_sq += pg.at(i, k) * pg.at(i, k);
  mean_sq /= static_cast<double>(pg.rows);
  CHECK(fisher_trace(m, b) == doctest::Approx(mean_sq).epsilon(1e-13));

  // ridge shifts the product by ridge * v
  const ParamVector fr = fisher_apply(pg, v, 0.25);
  for (std::size_t k = 0; k < v.size(); ++k)
    CHECK(fr[k] == doctest::Approx(fv[k] + 0.25 * v[k]).epsilon(1e-12));
}

TEST_CASE("glorot init bounds, zero biases, reproducibility") {
  MlpArchitecture a;
  a.input_dim = 10;
  a.hidden_layers = {6};
  a.output_classes = 4;
  const MlpModel m1 = MlpModel::random_init(a, 77);
  const MlpModel m2 = MlpModel::random_init(a, 77);
  const MlpModel m3 = MlpModel::random_init(a, 78);
  CHECK(m1.params() == m2.params());
  CHECK(m1.params() != m3.params());

  const double bound0 = std::sqrt(6.0 / (10 + 6));
  for (std::size_t k = 0; k < 60; ++k) {
    CHECK(std::abs(m1.params()[k]) <= bound0);
  }
  for (std::size_t k = 60; k < 66; ++k) CHECK(m1.params()[k] == 0.0);
  const double bound1 = std::sqrt(6.0 / (6 + 4));
  for (std::size_t k = 66; k < 90; ++k)
    CHECK(std::abs(m1.params()[k]) <= bound1);
  for (std::size_t k = 90; k < 94; ++k) CHECK(m1.params()[k] == 0.0);

  double maxabs = 0.0;
  for (std::size_t k = 0; k < 60; ++k)
    maxabs = std::max(maxabs, std::abs(m1.params()[k]));
  CHECK(maxabs > 0.5 * bound0);  // actually spreads over the interval
}

TEST_CASE("shape and label validation") {
  const auto arch = small_tanh();
  const MlpModel m = MlpModel::random_init(arch, 5);

  Batch wrong_dim = random_batch(3, 4, 3, 6);
  CHECK_THROWS_AS(nll_loss(m, wrong_dim), ConfigError);

  Batch bad_label = random_batch(3, 3, 3, 7);
  bad_label.labels[1] = 3;
  CHECK_THROWS_AS(nll_loss(m, bad_label), ConfigError);
  bad_label.labels[1] = -1;
  CHECK_THROWS_AS(grad(m, bad_label), ConfigError);

  Batch empty;
  empty.inputs = Matrix(0, 3);
  CHECK_THROWS_AS(nll_loss(m, empty), ConfigError);

  CHECK_THROWS_AS(MlpModel(arch, ParamVector(5, 0.0)), ConfigError);
  ParamVector nan_params(arch.param_count(), 0.0);
  nan_params[3] = std::nan("");
  CHECK_THROWS_AS(MlpModel(arch, nan_params), NumericError);

  const Batch good = random_batch(3, 3, 3, 8);
  CHECK_THROWS_AS(hvp(m, good, ParamVector(4, 0.0)), ConfigError);
}
