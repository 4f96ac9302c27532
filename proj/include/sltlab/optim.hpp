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

#pragma once

#include <cstddef>

#include "sltlab/common.hpp"
#include "sltlab/linalg.hpp"
#include "sltlab/nn.hpp"

namespace sltlab {

enum class FisherSolver { cg, dense };

FisherSolver fisher_solver_from_string(const std::string& name);
std::string to_string(FisherSolver s);

/// Natural-gradient step settings. The preconditioner is the empirical
/// Fisher (1/m) sum_i g_i g_i^T damped by kappa = (alpha/d) * max(tr F, eps).
struct NgdConfig {
  double learning_rate = 1e-2;
  double alpha = 1e-2;
  double eps_smooth = 1e-10;
  FisherSolver solver = FisherSolver::cg;
  double cg_tol = 1e-10;
  std::size_t cg_max_iters = 0;  // 0: 10 * d

  void validate() const;
};

struct StepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
  double update_norm = 0.0;        // ||w' - w|| of the applied displacement
  double kappa = 0.0;              // damping used (0 for plain SGD)
  std::size_t solver_iterations = 0;
};

/// kappa = (alpha / dim) * max(fisher_trace, eps_smooth).
double smoothing_kappa(double alpha, double fisher_trace, std::size_t dim,
                       double eps_smooth);

/// w' = w - lr * grad(batch). Mutates the model parameters.
StepResult sgd_step(MlpModel& model, const Batch& batch, double learning_rate);

/// Solves (F + kappa I) u = g for a precomputed per-example gradient matrix
/// and mean gradient; exposed separately so the solvers can be compared.
ParamVector ngd_solve(const Matrix& per_example_grads,
                      const ParamVector& grad, const NgdConfig& cfg,
                      double* kappa_out = nullptr,
                      std::size_t* iterations_out = nullptr);

/// w' = w - lr * u with (F + kappa I) u = grad(batch). Mutates the model.
StepResult ngd_step(MlpModel& model, const Batch& batch, const NgdConfig& cfg);

}  // namespace sltlab
