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

#include "sltlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace sltlab::stats {

namespace {

// Continued fraction for the incomplete beta (modified Lentz). Converges
// quickly when x < (a+1)/(a+b+2); the caller flips to the symmetric case
// otherwise.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double md = static_cast<double>(m);
    const double m2 = 2.0 * md;
    double aa = md * (b - md) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + md) * (qab + md) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) throw ConfigError("mean of empty sample");
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw ConfigError("variance needs at least two values");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) {
    const double d = v - m;
    ss += d * d;
  }
  return ss / static_cast<double>(x.size() - 1);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ConfigError("incomplete beta needs a, b > 0");
  if (x < 0.0 || x > 1.0)
    throw ConfigError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw ConfigError("student_t_sf needs df > 0");
  if (!std::isfinite(t)) return t > 0 ? 0.0 : 1.0;
  const double x = df / (df + t * t);
  const double half_tail =
      0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

WelchResult welch_one_sided_greater(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw ConfigError("welch test needs at least two values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;
  const double denom = va + vb;
  WelchResult r;
  if (denom == 0.0) {
    // Degenerate pair of constant samples: fall back to a sign comparison.
    r.t = mean(a) > mean(b) ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
    r.df = na + nb - 2.0;
    r.p = mean(a) > mean(b) ? 0.0 : 1.0;
    return r;
  }
  r.t = (mean(a) - mean(b)) / std::sqrt(denom);
  r.df = denom * denom /
         (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = student_t_sf(r.t, r.df);
  return r;
}

namespace {

std::vector<double> tie_averaged_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&x](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ConfigError("spearman inputs must have equal length");
  if (x.size() < 3)
    throw ConfigError("spearman needs at least three pairs");
  const auto rx = tie_averaged_ranks(x);
  const auto ry = tie_averaged_ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw NumericError("spearman undefined: a sample is constant");
  return sxy / std::sqrt(sxx * syy);
}

double LineFit::p_slope_positive() const {
  if (slope_se == 0.0) return slope > 0.0 ? 0.0 : 1.0;
  return student_t_sf(slope / slope_se, df);
}

double LineFit::p_slope_negative() const {
  if (slope_se == 0.0) return slope < 0.0 ? 0.0 : 1.0;
  return student_t_sf(-slope / slope_se, df);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ConfigError("fit_line inputs must have equal length");
  if (x.size() < 3) throw ConfigError("fit_line needs at least three points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    sxx += dx * dx;
    sxy += dx * (y[i] - my);
  }
  if (sxx == 0.0) throw NumericError("fit_line undefined: x is constant");

  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.df = n - 2.0;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ssr += r * r;
  }
  f.slope_se = std::sqrt(ssr / f.df / sxx);
  return f;
}

}  // namespace sltlab::stats
