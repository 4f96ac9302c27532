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

#include "sltlab/linalg.hpp"

#include <cassert>
#include <cstdio>
#include <cmath>
#include <string>

#include "sltlab/common.hpp"

namespace sltlab::la {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(std::span<double> x, double a) {
  for (double& v : x) v *= a;
}

std::vector<double> sub(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  std::vector<double> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

void matvec(const Matrix& m, std::span<const double> x, std::span<double> y) {
  assert(x.size() == m.cols && y.size() == m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    y[i] = dot({m.row(i), m.cols}, x);
  }
}

void matvec_transposed(const Matrix& m, std::span<const double> x,
                       std::span<double> y) {
  assert(x.size() == m.rows && y.size() == m.cols);
  for (double& v : y) v = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    axpy(x[i], {m.row(i), m.cols}, y);
  }
}

std::vector<double> cholesky_solve(Matrix a, std::span<const double> b) {
  const std::size_t d = a.rows;
  if (a.cols != d || b.size() != d) {
    throw ConfigError("cholesky_solve: dimension mismatch");
  }
  // In-place lower-triangular factorization A = L L^T.
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a.at(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= a.at(j, k) * a.at(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw SolverError("cholesky_solve: matrix not positive definite (pivot " +
                        std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(diag);
    a.at(j, j) = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / ljj;
    }
  }
  // Forward then backward substitution.
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t i = 0; i < d; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= a.at(i, k) * x[k];
    x[i] = s / a.at(i, i);
  }
  for (std::size_t ii = d; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < d; ++k) s -= a.at(k, ii) * x[k];
    x[ii] = s / a.at(ii, ii);
  }
  return x;
}

CgResult conjugate_gradient(
    const std::function<std::vector<double>(std::span<const double>)>& apply,
    std::span<const double> b, double tol, std::size_t max_iters) {
  const std::size_t d = b.size();
  const double bnorm = norm2(b);
  CgResult result;
  result.x.assign(d, 0.0);
  if (bnorm == 0.0) return result;  // x = 0 solves exactly

  std::vector<double> r(b.begin(), b.end());  // r = b - S*0
  std::vector<double> p = r;
  double rr = dot(r, r);
  for (std::size_t it = 0; it < max_iters; ++it) {
    if (std::sqrt(rr) <= tol * bnorm) break;
    std::vector<double> sp = apply(p);
    const double psp = dot(p, sp);
    if (!(psp > 0.0) || !std::isfinite(psp)) {
      throw SolverError(
          "conjugate_gradient: operator not positive definite (p^T S p = " +
          std::to_string(psp) + ")");
    }
    const double step = rr / psp;
    axpy(step, p, result.x);
    axpy(-step, sp, r);
    const double rr_next = dot(r, r);
    const double ratio = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < d; ++i) p[i] = r[i] + ratio * p[i];
    result.iterations = it + 1;
  }
  // Report against the true residual, not the recurrence.
  std::vector<double> sx = apply(result.x);
  for (std::size_t i = 0; i < d; ++i) sx[i] -= b[i];
  result.rel_residual = norm2(sx) / bnorm;
  if (result.rel_residual > tol) {
    char res[32];
    std::snprintf(res, sizeof res, "%.3e", result.rel_residual);
    throw SolverError("conjugate_gradient: no convergence in " +
                      std::to_string(max_iters) + " iterations (rel residual " +
                      res + "); loosen cg_tol or raise cg_max_iters");
  }
  return result;
}

}  // namespace sltlab::la
