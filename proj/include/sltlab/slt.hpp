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
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sltlab/common.hpp"
#include "sltlab/data.hpp"
#include "sltlab/nn.hpp"
#include "sltlab/stats.hpp"

namespace sltlab {

/// What a localized tempered-posterior sampler needs from a model/dataset
/// pair. Losses are mean negative log likelihoods; the estimators scale by
/// the sample size themselves.
class SgldTarget {
 public:
  virtual ~SgldTarget() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t sample_size() const = 0;
  /// Gradient of the mean NLL on a fresh minibatch drawn from rng.
  virtual ParamVector minibatch_grad(const ParamVector& w,
                                     std::mt19937_64& rng) = 0;
  /// Mean NLL on a fresh minibatch drawn from rng, independent of the
  /// gradient batches.
  virtual double minibatch_loss(const ParamVector& w,
                                std::mt19937_64& rng) = 0;
  /// Mean NLL over the full sample (used once, for the reference level).
  virtual double full_loss(const ParamVector& w) = 0;
};

/// Classifier + training set as a sampling target. Minibatches are drawn
/// uniformly with replacement.
class DatasetTarget : public SgldTarget {
 public:
  DatasetTarget(MlpArchitecture arch, const Dataset* data,
                std::size_t minibatch_size);
  std::size_t dim() const override;
  std::size_t sample_size() const override;
  ParamVector minibatch_grad(const ParamVector& w,
                             std::mt19937_64& rng) override;
  double minibatch_loss(const ParamVector& w, std::mt19937_64& rng) override;
  double full_loss(const ParamVector& w) override;

 private:
  Batch draw_batch(std::mt19937_64& rng) const;
  MlpArchitecture arch_;
  const Dataset* data_;
  std::size_t minibatch_size_;
};

/// Closed-form potential U(w) with its exact gradient, standing in for a
/// mean NLL with a known learning coefficient. sample_size is the synthetic
/// n, so n * U plays the role of the total loss.
class PotentialTarget : public SgldTarget {
 public:
  PotentialTarget(std::function<double(std::span<const double>)> value,
                  std::function<ParamVector(std::span<const double>)> gradient,
                  std::size_t dim, std::size_t synthetic_n);
  std::size_t dim() const override;
  std::size_t sample_size() const override;
  ParamVector minibatch_grad(const ParamVector& w,
                             std::mt19937_64& rng) override;
  double minibatch_loss(const ParamVector& w, std::mt19937_64& rng) override;
  double full_loss(const ParamVector& w) override;

 private:
  std::function<double(std::span<const double>)> value_;
  std::function<ParamVector(std::span<const double>)> gradient_;
  std::size_t dim_;
  std::size_t n_;
};

struct SgldConfig {
  double step_size = 1e-5;
  double gamma = 100.0;        // localization strength toward w*
  std::size_t num_chains = 4;
  std::size_t num_draws = 2000;  // recorded draws per chain, after burn-in
  std::size_t burn_in = 200;
  double beta = 0.0;             // 0: use 1 / log(sample_size)
  double divergence_radius = 0.0;  // 0: use 10 * max(||w*||, 1)
  std::uint64_t seed = 0;
  bool record_params = false;

  void validate() const;
  double effective_beta(std::size_t sample_size) const;
  double effective_radius(std::span<const double> w_star) const;
};

struct SgldChain {
  std::vector<double> losses;            // mean NLL per recorded draw
  std::vector<ParamVector> params;       // only if record_params
};

struct SgldResult {
  std::vector<SgldChain> chains;
  double beta = 0.0;
  double radius = 0.0;
};

/// Runs num_chains independent chains of the localized sampler
///   w += (step/2) * (-beta * n * grad_nll + gamma * (w* - w)) + sqrt(step) * xi
/// recording the minibatch mean NLL of each post-burn-in draw. Throws
/// NumericError if a chain leaves the divergence radius or goes non-finite.
SgldResult sgld_sample(SgldTarget& target, const ParamVector& w_star,
                       const SgldConfig& config);

struct LlcEstimate {
  double lambda_hat = 0.0;
  double lambda_se = 0.0;
  double wbic = 0.0;       // posterior mean of n * L_n
  double wbic_se = 0.0;
  double nl_ref = 0.0;     // n * full-sample mean NLL at w*
  double beta = 0.0;
  std::vector<double> chain_lambda;
};

/// Local learning coefficient lambda_hat = beta * (E[n L_n] - n L_n(w*))
/// estimated from the sampler draws; the WBIC is the E[n L_n] term.
/// Standard errors come from between-chain spread when more than one chain
/// runs, otherwise from the within-chain draw variance.
LlcEstimate estimate_llc(SgldTarget& target, const ParamVector& w_star,
                         const SgldConfig& config);

/// n * mean_nll + (dim / 2) * log(n).
double compute_bic(double mean_nll, std::size_t sample_size, std::size_t dim);

/// Closed-form scalar field over a centered box, used as ground truth for
/// the volume-scaling and sampler sanity checks.
struct AnalyticPotential {
  std::string name;
  std::size_t dim = 0;
  double box_halfwidth = 1.0;
  std::function<double(std::span<const double>)> value;
  std::function<ParamVector(std::span<const double>)> gradient;
};

/// Bundled ground-truth potentials: "quadratic-1d" (|w|^2, coefficient 1/2),
/// "quadratic-2d" (coefficient 1), "degenerate-2d" (w1^2 w2^2,
/// coefficient 1/2 with multiplicity 2).
AnalyticPotential make_potential(const std::string& name);
std::vector<std::string> potential_names();

struct VolumePoint {
  double epsilon = 0.0;
  double volume = 0.0;   // Monte Carlo estimate of vol{w in box : U(w) < eps}
  std::size_t hits = 0;
};

/// Uniform-sampling estimate of the sublevel-set volumes for each epsilon.
/// Throws NumericError if any epsilon collects fewer than 100 hits, since a
/// slope fit on such points would be noise.
std::vector<VolumePoint> volume_scan(const AnalyticPotential& potential,
                                     std::span<const double> epsilons,
                                     std::size_t num_samples,
                                     std::uint64_t seed);

/// Least-squares slope of log V against log epsilon; the local learning
/// coefficient this scan estimates.
stats::LineFit log_log_fit(std::span<const VolumePoint> points);

}  // namespace sltlab
