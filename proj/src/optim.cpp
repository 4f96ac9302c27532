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

#include "sltlab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sltlab {

FisherSolver fisher_solver_from_string(const std::string& name) {
  if (name == "cg") return FisherSolver::cg;
  if (name == "dense") return FisherSolver::dense;
  throw ConfigError("unknown fisher solver '" + name + "' (want cg or dense)");
}

std::string to_string(FisherSolver s) {
  return s == FisherSolver::cg ? "cg" : "dense";
}

void NgdConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw ConfigError("ngd learning_rate must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("ngd alpha must be > 0");
  if (!(eps_smooth > 0.0)) throw ConfigError("ngd eps_smooth must be > 0");
  if (!(cg_tol > 0.0)) throw ConfigError("ngd cg_tol must be > 0");
}

double smoothing_kappa(double alpha, double fisher_trace, std::size_t dim,
                       double eps_smooth) {
  if (dim == 0) throw ConfigError("smoothing_kappa needs dim > 0");
  return (alpha / static_cast<double>(dim)) *
         std::max(fisher_trace, eps_smooth);
}

StepResult sgd_step(MlpModel& model, const Batch& batch,
                    double learning_rate) {
  if (!(learning_rate > 0.0))
    throw ConfigError("sgd learning_rate must be > 0");
  auto lg = loss_and_grad(model, batch);
  ParamVector w = model.params();
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] -= learning_rate * lg.grad[k];

  StepResult r;
  r.loss = lg.loss;
  r.grad_norm = la::norm2(lg.grad);
  r.update_norm = learning_rate * r.grad_norm;
  model.set_params(std::move(w));
  return r;
}

ParamVector ngd_solve(const Matrix& g, const ParamVector& grad,
                      const NgdConfig& cfg, double* kappa_out,
                      std::size_t* iterations_out) {
  cfg.validate();
  const std::size_t d = g.cols;
  if (grad.size() != d)
    throw ConfigError("ngd_solve gradient size does not match");
  const double kappa =
      smoothing_kappa(cfg.alpha, fisher_trace_of(g), d, cfg.eps_smooth);
  if (kappa_out) *kappa_out = kappa;

  if (cfg.solver == FisherSolver::dense) {
    // Materialize F + kappa I. Only sensible for small models; the solver
    // comparison tests rely on it as the reference path.
    const std::size_t m = g.rows;
    Matrix a(d, d);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      const double* gi = g.data.data() + i * d;
      for (std::size_t r = 0; r < d; ++r) {
        const double c = gi[r] * inv_m;
        if (c == 0.0) continue;
        double* ar = a.data.data() + r * d;
        for (std::size_t s = 0; s < d; ++s) ar[s] += c * gi[s];
      }
    }
    for (std::size_t r = 0; r < d; ++r) a.at(r, r) += kappa;
    if (iterations_out) *iterations_out = 0;
    return la::cholesky_solve(std::move(a), grad);
  }

  const std::size_t max_iters =
      cfg.cg_max_iters > 0 ? cfg.cg_max_iters : 10 * d;
  auto apply = [&g, kappa](std::span<const double> v) {
    return fisher_apply(g, v, kappa);
  };
  auto res = la::conjugate_gradient(apply, grad, cfg.cg_tol, max_iters);
  if (iterations_out) *iterations_out = res.iterations;
  return std::move(res.x);
}

StepResult ngd_step(MlpModel& model, const Batch& batch,
                    const NgdConfig& cfg) {
  cfg.validate();
  auto lg = loss_and_grad(model, batch);
  const Matrix g = per_example_grads(model, batch);

  StepResult r;
  r.loss = lg.loss;
  r.grad_norm = la::norm2(lg.grad);
  const ParamVector u =
      ngd_solve(g, lg.grad, cfg, &r.kappa, &r.solver_iterations);

  ParamVector w = model.params();
  for (std::size_t k = 0; k < w.size(); ++k)
    w[k] -= cfg.learning_rate * u[k];
  r.update_norm = cfg.learning_rate * la::norm2(u);
  model.set_params(std::move(w));
  return r;
}

}  // namespace sltlab
