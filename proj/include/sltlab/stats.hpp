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
#include <span>

#include "sltlab/common.hpp"

namespace sltlab::stats {

double mean(std::span<const double> x);
/// Unbiased (n-1) sample variance; requires at least two values.
double sample_variance(std::span<const double> x);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1],
/// evaluated with a continued fraction (modified Lentz).
double regularized_incomplete_beta(double a, double b, double x);

/// Survival function P(T > t) of Student's t with df degrees of freedom
/// (df need not be an integer).
double student_t_sf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // one-sided, H1: mean(a) > mean(b)
};

/// Welch's unequal-variance t-test; returns the one-sided p-value for the
/// alternative mean(a) > mean(b).
WelchResult welch_one_sided_greater(std::span<const double> a,
                                    std::span<const double> b);

/// Spearman rank correlation with tie-averaged ranks.
double spearman_rho(std::span<const double> x, std::span<const double> y);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double df = 0.0;  // n - 2

  /// One-sided p-values for the sign of the slope.
  double p_slope_positive() const;
  double p_slope_negative() const;
};

/// Ordinary least squares y ~ slope * x + intercept with the usual
/// residual-based standard error for the slope.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace sltlab::stats
