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
#include <functional>
#include <span>
#include <vector>

namespace sltlab {

/// Dense row-major matrix. Thin container; all math lives in free functions
/// so callers can also operate on raw spans.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row_span(std::size_t i) const {
    return {row(i), cols};
  }
};

namespace la {

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(std::span<double> x, double a);
std::vector<double> sub(std::span<const double> a, std::span<const double> b);

/// y = M x  (y has M.rows entries)
void matvec(const Matrix& m, std::span<const double> x, std::span<double> y);
/// y = M^T x  (y has M.cols entries)
void matvec_transposed(const Matrix& m, std::span<const double> x,
                       std::span<double> y);

/// Solves A x = b for symmetric positive definite A (row-major d x d) by
/// Cholesky factorization. A is destroyed. Throws SolverError if A is not
/// positive definite.
std::vector<double> cholesky_solve(Matrix a, std::span<const double> b);

struct CgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  double rel_residual = 0.0;
};

/// Conjugate gradient for S x = b with S symmetric positive definite,
/// provided as a matrix-free operator. Stops when the true residual
/// satisfies ||S x - b|| <= tol * ||b||; throws SolverError (carrying the
/// final relative residual) if that does not happen within max_iters.
CgResult conjugate_gradient(
    const std::function<std::vector<double>(std::span<const double>)>& apply,
    std::span<const double> b, double tol, std::size_t max_iters);

}  // namespace la
}  // namespace sltlab
