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

#include "sltlab/slt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "sltlab/linalg.hpp"

namespace sltlab {

// --- targets ---------------------------------------------------------------

DatasetTarget::DatasetTarget(MlpArchitecture arch, const Dataset* data,
                             std::size_t minibatch_size)
    : arch_(std::move(arch)), data_(data), minibatch_size_(minibatch_size) {
  arch_.validate();
  if (data_ == nullptr) throw ConfigError("dataset target needs a dataset");
  data_->validate();
  if (minibatch_size_ == 0)
    throw ConfigError("dataset target minibatch size must be > 0");
  if (arch_.input_dim != data_->feature_dim())
    throw ConfigError("dataset feature dim " +
                      std::to_string(data_->feature_dim()) +
                      " does not match architecture input dim " +
                      std::to_string(arch_.input_dim));
}

std::size_t DatasetTarget::dim() const { return arch_.param_count(); }
std::size_t DatasetTarget::sample_size() const { return data_->size(); }

Batch DatasetTarget::draw_batch(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, data_->size() - 1);
  Batch b;
  b.inputs = Matrix(minibatch_size_, data_->feature_dim());
  b.labels.resize(minibatch_size_);
  for (std::size_t i = 0; i < minibatch_size_; ++i) {
    const std::size_t j = pick(rng);
    const auto src = data_->inputs.row_span(j);
    std::copy(src.begin(), src.end(),
              b.inputs.data.begin() +
                  static_cast<std::ptrdiff_t>(i * b.inputs.cols));
    b.labels[i] = data_->labels[j];
  }
  return b;
}

ParamVector DatasetTarget::minibatch_grad(const ParamVector& w,
                                          std::mt19937_64& rng) {
  const MlpModel model(arch_, w);
  return grad(model, draw_batch(rng));
}

double DatasetTarget::minibatch_loss(const ParamVector& w,
                                     std::mt19937_64& rng) {
  const MlpModel model(arch_, w);
  return nll_loss(model, draw_batch(rng));
}

double DatasetTarget::full_loss(const ParamVector& w) {
  const MlpModel model(arch_, w);
  return nll_loss(model, to_batch(*data_));
}

PotentialTarget::PotentialTarget(
    std::function<double(std::span<const double>)> value,
    std::function<ParamVector(std::span<const double>)> gradient,
    std::size_t dim, std::size_t synthetic_n)
    : value_(std::move(value)),
      gradient_(std::move(gradient)),
      dim_(dim),
      n_(synthetic_n) {
  if (!value_ || !gradient_)
    throw ConfigError("potential target needs value and gradient callables");
  if (dim_ == 0) throw ConfigError("potential target needs dim > 0");
  if (n_ < 2) throw ConfigError("potential target needs synthetic n >= 2");
}

std::size_t PotentialTarget::dim() const { return dim_; }
std::size_t PotentialTarget::sample_size() const { return n_; }

ParamVector PotentialTarget::minibatch_grad(const ParamVector& w,
                                            std::mt19937_64&) {
  ParamVector g = gradient_(w);
  if (g.size() != dim_)
    throw NumericError("potential gradient returned wrong dimension");
  return g;
}

double PotentialTarget::minibatch_loss(const ParamVector& w,
                                       std::mt19937_64&) {
  return value_(w);
}

double PotentialTarget::full_loss(const ParamVector& w) { return value_(w); }

// --- sampler ----------------------------------------------------------------

void SgldConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("sgld step_size must be > 0");
  if (!(gamma >= 0.0)) throw ConfigError("sgld gamma must be >= 0");
  if (num_chains == 0) throw ConfigError("sgld num_chains must be > 0");
  if (num_draws == 0) throw ConfigError("sgld num_draws must be > 0");
  if (beta < 0.0) throw ConfigError("sgld beta must be >= 0 (0 = auto)");
  if (divergence_radius < 0.0)
    throw ConfigError("sgld divergence_radius must be >= 0 (0 = auto)");
}

double SgldConfig::effective_beta(std::size_t sample_size) const {
  if (beta > 0.0) return beta;
  if (sample_size < 2)
    throw ConfigError("auto beta needs sample_size >= 2");
  return 1.0 / std::log(static_cast<double>(sample_size));
}

double SgldConfig::effective_radius(std::span<const double> w_star) const {
  if (divergence_radius > 0.0) return divergence_radius;
  double norm = 0.0;
  for (double v : w_star) norm += v * v;
  return 10.0 * std::max(std::sqrt(norm), 1.0);
}

SgldResult sgld_sample(SgldTarget& target, const ParamVector& w_star,
                       const SgldConfig& config) {
  config.validate();
  const std::size_t d = target.dim();
  if (w_star.size() != d)
    throw ConfigError("sgld center has " + std::to_string(w_star.size()) +
                      " entries, target has " + std::to_string(d));
  check_finite(w_star, "sgld center");

  const double n = static_cast<double>(target.sample_size());
  SgldResult result;
  result.beta = config.effective_beta(target.sample_size());
  result.radius = config.effective_radius(w_star);
  result.chains.resize(config.num_chains);

  const double half_step = 0.5 * config.step_size;
  const double noise_sd = std::sqrt(config.step_size);
  const double drift_scale = result.beta * n;

  for (std::size_t c = 0; c < config.num_chains; ++c) {
    auto rng = make_rng(derive_seed(config.seed, c));
    std::normal_distribution<double> xi(0.0, 1.0);
    ParamVector w = w_star;
    SgldChain& chain = result.chains[c];
    chain.losses.reserve(config.num_draws);
    if (config.record_params) chain.params.reserve(config.num_draws);

    const std::size_t total = config.burn_in + config.num_draws;
    for (std::size_t t = 0; t < total; ++t) {
      const ParamVector g = target.minibatch_grad(w, rng);
      double dist2 = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double drift =
            half_step * (-drift_scale * g[k] +
                         config.gamma * (w_star[k] - w[k]));
        w[k] += drift + noise_sd * xi(rng);
        const double dev = w[k] - w_star[k];
        dist2 += dev * dev;
      }
      if (!all_finite(w) || dist2 > result.radius * result.radius) {
        throw NumericError(
            "sgld chain " + std::to_string(c) + " diverged at step " +
            std::to_string(t) + " (distance " +
            std::to_string(std::sqrt(dist2)) + " vs radius " +
            std::to_string(result.radius) +
            "); lower step_size or raise gamma");
      }
      if (t >= config.burn_in) {
        chain.losses.push_back(target.minibatch_loss(w, rng));
        if (config.record_params) chain.params.push_back(w);
      }
    }
  }
  return result;
}

// --- estimators ---------------------------------------------------------

LlcEstimate estimate_llc(SgldTarget& target, const ParamVector& w_star,
                         const SgldConfig& config) {
  const SgldResult draws = sgld_sample(target, w_star, config);
  const double n = static_cast<double>(target.sample_size());

  LlcEstimate est;
  est.beta = draws.beta;
  est.nl_ref = n * target.full_loss(w_star);

  std::vector<double> chain_wbic(draws.chains.size());
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    const auto& losses = draws.chains[c].losses;
    double acc = 0.0;
    for (double l : losses) acc += l;
    chain_wbic[c] = n * acc / static_cast<double>(losses.size());
  }
  est.chain_lambda.resize(chain_wbic.size());
  for (std::size_t c = 0; c < chain_wbic.size(); ++c)
    est.chain_lambda[c] = est.beta * (chain_wbic[c] - est.nl_ref);

  est.wbic = stats::mean(chain_wbic);
  est.lambda_hat = est.beta * (est.wbic - est.nl_ref);
  if (chain_wbic.size() > 1) {
    const double sd = std::sqrt(stats::sample_variance(chain_wbic));
    est.wbic_se = sd / std::sqrt(static_cast<double>(chain_wbic.size()));
    est.lambda_se = est.beta * est.wbic_se;
  } else {
    // Single chain: naive draw-level standard error (ignores autocorrelation).
    const auto& losses = draws.chains[0].losses;
    std::vector<double> scaled(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i) scaled[i] = n * losses[i];
    const double sd = std::sqrt(stats::sample_variance(scaled));
    est.wbic_se = sd / std::sqrt(static_cast<double>(scaled.size()));
    est.lambda_se = est.beta * est.wbic_se;
  }
  return est;
}

double compute_bic(double mean_nll, std::size_t sample_size,
                   std::size_t dim) {
  if (sample_size < 2) throw ConfigError("bic needs sample_size >= 2");
  if (dim == 0) throw ConfigError("bic needs dim > 0");
  const double n = static_cast<double>(sample_size);
  return n * mean_nll + 0.5 * static_cast<double>(dim) * std::log(n);
}

// --- analytic potentials and volume scaling -------------------------------

AnalyticPotential make_potential(const std::string& name) {
  AnalyticPotential p;
  p.name = name;
  p.box_halfwidth = 1.0;
  if (name == "quadratic-1d") {
    p.dim = 1;
    p.value = [](std::span<const double> w) { return w[0] * w[0]; };
    p.gradient = [](std::span<const double> w) {
      return ParamVector{2.0 * w[0]};
    };
  } else if (name == "quadratic-2d") {
    p.dim = 2;
    p.value = [](std::span<const double> w) {
      return w[0] * w[0] + w[1] * w[1];
    };
    p.gradient = [](std::span<const double> w) {
      return ParamVector{2.0 * w[0], 2.0 * w[1]};
    };
  } else if (name == "degenerate-2d") {
    p.dim = 2;
    p.value = [](std::span<const double> w) {
      return w[0] * w[0] * w[1] * w[1];
    };
    p.gradient = [](std::span<const double> w) {
      return ParamVector{2.0 * w[0] * w[1] * w[1],
                         2.0 * w[0] * w[0] * w[1]};
    };
  } else {
    throw ConfigError("unknown potential '" + name +
                      "' (known: quadratic-1d, quadratic-2d, degenerate-2d)");
  }
  return p;
}

std::vector<std::string> potential_names() {
  return {"quadratic-1d", "quadratic-2d", "degenerate-2d"};
}

std::vector<VolumePoint> volume_scan(const AnalyticPotential& potential,
                                     std::span<const double> epsilons,
                                     std::size_t num_samples,
                                     std::uint64_t seed) {
  if (!potential.value) throw ConfigError("potential has no value callable");
  if (potential.dim == 0) throw ConfigError("potential dim must be > 0");
  if (epsilons.empty()) throw ConfigError("volume scan needs epsilons");
  if (num_samples == 0) throw ConfigError("volume scan needs samples");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ConfigError("volume scan epsilons must be > 0");

  std::vector<VolumePoint> out(epsilons.size());
  for (std::size_t j = 0; j < epsilons.size(); ++j)
    out[j].epsilon = epsilons[j];

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-potential.box_halfwidth,
                                           potential.box_halfwidth);
  ParamVector w(potential.dim);
  for (std::size_t s = 0; s < num_samples; ++s) {
    for (std::size_t k = 0; k < potential.dim; ++k) w[k] = u(rng);
    const double v = potential.value(w);
    for (auto& pt : out)
      if (v < pt.epsilon) ++pt.hits;
  }

  const double box = std::pow(2.0 * potential.box_halfwidth,
                              static_cast<double>(potential.dim));
  for (auto& pt : out) {
    if (pt.hits < 100) {
      throw NumericError(
          "volume scan collected only " + std::to_string(pt.hits) +
          " hits at epsilon " + std::to_string(pt.epsilon) +
          "; raise num_samples for a usable estimate");
    }
    pt.volume =
        box * static_cast<double>(pt.hits) / static_cast<double>(num_samples);
  }
  return out;
}

stats::LineFit log_log_fit(std::span<const VolumePoint> points) {
  if (points.size() < 3)
    throw ConfigError("log-log fit needs at least three volume points");
  std::vector<double> lx(points.size()), ly(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    lx[i] = std::log(points[i].epsilon);
    ly[i] = std::log(points[i].volume);
  }
  return stats::fit_line(lx, ly);
}

}  // namespace sltlab
