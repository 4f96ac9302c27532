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

#include "doctest.h"
#include "sltlab/linalg.hpp"
#include "sltlab/optim.hpp"

using namespace sltlab;

namespace {

MlpArchitecture arch463() {
  MlpArchitecture a;
  a.input_dim = 4;
  a.hidden_layers = {6};
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

TEST_CASE("smoothing kappa formula and floor") {
  CHECK(smoothing_kappa(0.01, 2.5, 10, 1e-10) ==
        doctest::Approx(0.0025).epsilon(1e-15));
  // trace below the floor: the floor takes over
  CHECK(smoothing_kappa(0.01, 0.0, 10, 1e-10) ==
        doctest::Approx(1e-13).epsilon(1e-12));
  CHECK(smoothing_kappa(2.0, 1e-12, 4, 1e-10) ==
        doctest::Approx(5e-11).epsilon(1e-12));
  CHECK_THROWS_AS(smoothing_kappa(0.01, 1.0, 0, 1e-10), ConfigError);
}

TEST_CASE("sgd step applies w - lr * grad exactly") {
  const auto arch = arch463();
  MlpModel m = MlpModel::random_init(arch, 5);
  const Batch b = random_batch(8, 4, 3, 6);
  const ParamVector w0 = m.params();
  const LossAndGrad lg = loss_and_grad(m, b);

  const StepResult r = sgd_step(m, b, 0.1);
  CHECK(r.loss == doctest::Approx(lg.loss).epsilon(1e-15));
  CHECK(r.kappa == 0.0);
  for (std::size_t k = 0; k < w0.size(); ++k)
    CHECK(m.params()[k] ==
          doctest::Approx(w0[k] - 0.1 * lg.grad[k]).epsilon(1e-15));

  double norm = 0.0;
  for (std::size_t k = 0; k < w0.size(); ++k) {
    const double d = m.params()[k] - w0[k];
    norm += d * d;
  }
  CHECK(r.update_norm == doctest::Approx(std::sqrt(norm)).epsilon(1e-12));
  CHECK_THROWS_AS(sgd_step(m, b, 0.0), ConfigError);
}

TEST_CASE("ngd solvers agree and satisfy the damped system") {
  const auto arch = arch463();  // d = 51
  const MlpModel m = MlpModel::random_init(arch, 15);
  const Batch b = random_batch(8, 4, 3, 16);
  const Matrix pg = per_example_grads(m, b);
  const ParamVector g = grad(m, b);

  NgdConfig cfg;
  cfg.alpha = 0.01;
  cfg.cg_tol = 1e-12;
  double kappa_cg = 0.0, kappa_dense = 0.0;
  std::size_t iters = 0;
  cfg.solver = FisherSolver::cg;
  const ParamVector u_cg = ngd_solve(pg, g, cfg, &kappa_cg, &iters);
  cfg.solver = FisherSolver::dense;
  const ParamVector u_dense = ngd_solve(pg, g, cfg, &kappa_dense);

  CHECK(kappa_cg == doctest::Approx(kappa_dense).epsilon(1e-15));
  CHECK(kappa_cg ==
        doctest::Approx(smoothing_kappa(0.01, fisher_trace_of(pg), pg.cols,
                                        cfg.eps_smooth))
            .epsilon(1e-15));
  CHECK(iters >= 1);
  CHECK(iters <= pg.rows + 2);  // rank <= m, so CG finishes in about m steps

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < u_cg.size(); ++k) {
    num += (u_cg[k] - u_dense[k]) * (u_cg[k] - u_dense[k]);
    den += u_dense[k] * u_dense[k];
  }
  CHECK(std::sqrt(num / den) < 1e-8);

  // residual of the solved system: (F + kappa I) u = g
  const ParamVector back = fisher_apply(pg, u_cg, kappa_cg);
  double rnum = 0.0, rden = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    rnum += (back[k] - g[k]) * (back[k] - g[k]);
    rden += g[k] * g[k];
  }
  CHECK(std::sqrt(rnum / rden) < 1e-10);
}

TEST_CASE("huge damping collapses ngd onto the gradient direction") {
  const auto arch = arch463();
  const MlpModel m = MlpModel::random_init(arch, 25);
  const Batch b = random_batch(8, 4, 3, 26);
  const Matrix pg = per_example_grads(m, b);
  const ParamVector g = grad(m, b);

  NgdConfig cfg;
  cfg.alpha = 1e6;
  cfg.cg_tol = 1e-14;
  double kappa = 0.0;
  const ParamVector u = ngd_solve(pg, g, cfg, &kappa);

  // kappa * u -> g as alpha grows; the leftover is O(lambda_max(F)/kappa).
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double diff = kappa * u[k] - g[k];
    num += diff * diff;
    den += g[k] * g[k];
  }
  const double rel = std::sqrt(num / den);
  CHECK(rel < 1e-2);

  // cosine alignment with the raw gradient
  double dot = 0.0, nu = 0.0, ng = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    dot += u[k] * g[k];
    nu += u[k] * u[k];
    ng += g[k] * g[k];
  }
  CHECK(dot / std::sqrt(nu * ng) > 1.0 - 1e-4);
}

TEST_CASE("ngd step bookkeeping") {
  const auto arch = arch463();
  MlpModel m = MlpModel::random_init(arch, 35);
  const Batch b = random_batch(8, 4, 3, 36);
  const ParamVector w0 = m.params();

  NgdConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.alpha = 0.1;
  const StepResult r = ngd_step(m, b, cfg);
  CHECK(r.kappa > 0.0);
  CHECK(r.solver_iterations >= 1);
  CHECK(r.loss > 0.0);

  double norm = 0.0;
  for (std::size_t k = 0; k < w0.size(); ++k) {
    const double d = m.params()[k] - w0[k];
    norm += d * d;
  }
  CHECK(r.update_norm == doctest::Approx(std::sqrt(norm)).epsilon(1e-12));
}

TEST_CASE("ngd config validation and solver failure") {
  NgdConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.alpha = 0.1;
  cfg.eps_smooth = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(fisher_solver_from_string("qr"), ConfigError);
  CHECK(fisher_solver_from_string("dense") == FisherSolver::dense);

  const auto arch = arch463();
  MlpModel m = MlpModel::random_init(arch, 45);
  const Batch b = random_batch(8, 4, 3, 46);
  NgdConfig tight;
  tight.cg_tol = 1e-14;
  tight.cg_max_iters = 1;  // cannot converge in one iteration
  CHECK_THROWS_AS(ngd_step(m, b, tight), SolverError);
}
