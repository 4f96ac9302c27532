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

#include "sltlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace sltlab {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  const auto dt = std::chrono::steady_clock::now() - t0;
  return std::chrono::duration<double>(dt).count();
}

// Seed streams of a run, values arbitrary but fixed: they keep init, batch
// order, trace probes and sampler chains statistically independent.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kTraceStream = 3;
constexpr std::uint64_t kSamplerStream = 4;

MlpArchitecture resolve_arch(const MlpArchitecture& arch, const Dataset& train) {
  MlpArchitecture a = arch;
  if (a.input_dim == 0) a.input_dim = train.feature_dim();
  if (a.output_classes == 0) a.output_classes = train.num_classes;
  if (a.input_dim != train.feature_dim())
    throw ConfigError("architecture input dim " + std::to_string(a.input_dim) +
                      " does not match data feature dim " +
                      std::to_string(train.feature_dim()));
  if (a.output_classes < train.num_classes)
    throw ConfigError("architecture has " + std::to_string(a.output_classes) +
                      " classes but data has " +
                      std::to_string(train.num_classes));
  a.validate();
  return a;
}

double final_lambda(const RunResult& run) {
  for (auto it = run.records.rbegin(); it != run.records.rend(); ++it)
    if (it->lambda_hat) return *it->lambda_hat;
  throw ConfigError(
      "run produced no lambda_hat records; enable the llc metric");
}

}  // namespace

void OptimizerSettings::validate() const {
  if (method != "sgd" && method != "ngd")
    throw ConfigError("optimizer method '" + method + "' (want sgd or ngd)");
  if (!(learning_rate > 0.0))
    throw ConfigError("optimizer learning_rate must be > 0");
  if (method == "ngd") ngd.validate();
}

void MetricsConfig::validate() const {
  if (metric_batch == 0) throw ConfigError("metric_batch must be > 0");
  if (hessian) hutchinson.validate();
  if (llc) {
    sgld.validate();
    if (sgld_minibatch == 0) throw ConfigError("sgld_minibatch must be > 0");
  }
}

void RunConfig::validate() const {
  optimizer.validate();
  metrics.validate();
  if (epochs <= start_epoch)
    throw ConfigError("epochs (" + std::to_string(epochs) +
                      ") must exceed start_epoch (" +
                      std::to_string(start_epoch) + ")");
  if (batch_size == 0) throw ConfigError("batch_size must be > 0");
}

RunResult run_training(const RunConfig& cfg, const Dataset& train,
                       const Dataset& val, const RecordCallback& on_record) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  train.validate();
  val.validate();
  if (train.feature_dim() != val.feature_dim())
    throw ConfigError("train and val feature dims differ");

  RunResult result;
  result.arch = resolve_arch(cfg.arch, train);

  MlpModel model =
      cfg.init_params
          ? MlpModel(result.arch, *cfg.init_params)
          : MlpModel::random_init(result.arch,
                                  derive_seed(cfg.seed, kInitStream));

  const Batch train_all = to_batch(train);
  const Batch val_all = to_batch(val);
  const Batch metric_batch = head_batch(train, cfg.metrics.metric_batch);

  auto make_record = [&](std::size_t epoch, std::optional<double> update_norm,
                         std::optional<double> kappa_mean) {
    MetricsRecord r;
    r.epoch = epoch;
    r.train_loss = nll_loss(model, train_all);
    r.val_loss = nll_loss(model, val_all);
    r.update_norm = update_norm;
    r.kappa_mean = kappa_mean;

    const bool periodic =
        cfg.metrics.cadence > 0 && epoch % cfg.metrics.cadence == 0;
    const bool heavy = periodic || epoch == cfg.epochs;
    if (heavy && cfg.metrics.hessian) {
      HutchinsonConfig h = cfg.metrics.hutchinson;
      h.seed = derive_seed(cfg.seed, kTraceStream, epoch);
      const TraceEstimate te = hessian_trace(model, metric_batch, h);
      r.hessian_trace = te.mean;
      r.hessian_se = te.se;
    }
    if (heavy && cfg.metrics.llc) {
      DatasetTarget target(result.arch, &train, cfg.metrics.sgld_minibatch);
      SgldConfig s = cfg.metrics.sgld;
      s.seed = derive_seed(cfg.seed, kSamplerStream, epoch);
      const LlcEstimate est = estimate_llc(target, model.params(), s);
      r.lambda_hat = est.lambda_hat;
      r.lambda_se = est.lambda_se;
      r.wbic = est.wbic;
    }
    result.records.push_back(r);
    if (on_record) on_record(r);
  };

  make_record(cfg.start_epoch, std::nullopt, std::nullopt);

  const bool is_ngd = cfg.optimizer.method == "ngd";
  for (std::size_t epoch = cfg.start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_batches =
        batches(train, cfg.batch_size, derive_seed(cfg.seed, kBatchStream),
                epoch);
    double norm_acc = 0.0;
    double kappa_acc = 0.0;
    for (const Batch& b : epoch_batches) {
      const StepResult step =
          is_ngd ? ngd_step(model, b, cfg.optimizer.ngd)
                 : sgd_step(model, b, cfg.optimizer.learning_rate);
      norm_acc += step.update_norm;
      kappa_acc += step.kappa;
    }
    const double steps = static_cast<double>(epoch_batches.size());
    make_record(epoch, norm_acc / steps,
                is_ngd ? std::optional<double>(kappa_acc / steps)
                       : std::nullopt);
  }

  result.final_params = model.params();
  result.wall_seconds = seconds_since(t0);
  return result;
}

CompareOutcome experiment_compare(const RunConfig& base, const Dataset& train,
                                  const Dataset& val,
                                  std::span<const std::uint64_t> seeds) {
  const auto t0 = std::chrono::steady_clock::now();
  if (seeds.size() < 2)
    throw ConfigError("compare needs at least two seeds");
  if (!base.metrics.llc)
    throw ConfigError("compare needs the llc metric enabled");

  CompareOutcome out;
  out.seeds.assign(seeds.begin(), seeds.end());
  for (const std::uint64_t seed : seeds) {
    RunConfig cfg = base;
    cfg.seed = seed;
    cfg.optimizer.method = "sgd";
    out.sgd_runs.push_back(run_training(cfg, train, val));
    out.sgd_lambda.push_back(final_lambda(out.sgd_runs.back()));

    cfg.optimizer.method = "ngd";
    out.ngd_runs.push_back(run_training(cfg, train, val));
    out.ngd_lambda.push_back(final_lambda(out.ngd_runs.back()));
  }
  out.welch = stats::welch_one_sided_greater(out.ngd_lambda, out.sgd_lambda);
  out.wall_seconds = seconds_since(t0);
  return out;
}

SweepOutcome experiment_sweep(const RunConfig& base, const Dataset& train,
                              const Dataset& val,
                              std::span<const double> alphas,
                              std::span<const std::uint64_t> seeds) {
  const auto t0 = std::chrono::steady_clock::now();
  if (alphas.size() < 3)
    throw ConfigError("sweep needs at least three alphas");
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  if (!base.metrics.llc)
    throw ConfigError("sweep needs the llc metric enabled");
  for (double a : alphas)
    if (!(a > 0.0)) throw ConfigError("sweep alphas must be > 0");

  SweepOutcome out;
  std::vector<double> pooled_alpha;
  std::vector<double> pooled_lambda;
  for (const double alpha : alphas) {
    SweepPoint pt;
    pt.alpha = alpha;
    for (const std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      cfg.seed = seed;
      cfg.optimizer.method = "ngd";
      cfg.optimizer.ngd.alpha = alpha;
      const RunResult run = run_training(cfg, train, val);
      pt.lambda_per_seed.push_back(final_lambda(run));
      pooled_alpha.push_back(alpha);
      pooled_lambda.push_back(pt.lambda_per_seed.back());
    }
    pt.lambda_mean = stats::mean(pt.lambda_per_seed);
    out.points.push_back(std::move(pt));
  }
  for (const std::uint64_t seed : seeds) {
    RunConfig cfg = base;
    cfg.seed = seed;
    cfg.optimizer.method = "sgd";
    const RunResult run = run_training(cfg, train, val);
    out.sgd_lambda.push_back(final_lambda(run));
  }
  out.spearman = stats::spearman_rho(pooled_alpha, pooled_lambda);
  out.wall_seconds = seconds_since(t0);
  return out;
}

namespace {

stats::LineFit lambda_trend(std::span<const MetricsRecord> records,
                            std::size_t after_epoch) {
  std::vector<double> x, y;
  for (const auto& r : records) {
    if (r.epoch > after_epoch && r.lambda_hat) {
      x.push_back(static_cast<double>(r.epoch));
      y.push_back(*r.lambda_hat);
    }
  }
  if (x.size() < 3)
    throw ConfigError("branch produced only " + std::to_string(x.size()) +
                      " lambda_hat points after the fork; tighten the metric "
                      "cadence or extend the run");
  return stats::fit_line(x, y);
}

}  // namespace

ForkOutcome experiment_fork(const RunConfig& base, const Dataset& train,
                            const Dataset& val, std::size_t fork_epoch,
                            double control_lr_scale) {
  const auto t0 = std::chrono::steady_clock::now();
  if (fork_epoch == 0 || fork_epoch >= base.epochs)
    throw ConfigError("fork_epoch must be inside (0, epochs)");
  if (!(control_lr_scale > 0.0))
    throw ConfigError("control_lr_scale must be > 0");
  if (!base.metrics.llc)
    throw ConfigError("fork needs the llc metric enabled");

  RunConfig stem = base;
  stem.optimizer.method = "sgd";
  stem.epochs = fork_epoch;
  const RunResult stem_run = run_training(stem, train, val);

  RunConfig ngd_cfg = base;
  ngd_cfg.optimizer.method = "ngd";
  ngd_cfg.start_epoch = fork_epoch;
  ngd_cfg.init_params = stem_run.final_params;
  const RunResult ngd_run = run_training(ngd_cfg, train, val);

  RunConfig control_cfg = base;
  control_cfg.optimizer.method = "sgd";
  control_cfg.optimizer.learning_rate *= control_lr_scale;
  control_cfg.start_epoch = fork_epoch;
  control_cfg.init_params = stem_run.final_params;
  const RunResult control_run = run_training(control_cfg, train, val);

  ForkOutcome out;
  out.base_records = stem_run.records;
  out.ngd_records = ngd_run.records;
  out.control_records = control_run.records;
  out.ngd_trend = lambda_trend(out.ngd_records, fork_epoch);
  out.control_trend = lambda_trend(out.control_records, fork_epoch);
  out.wall_seconds = seconds_since(t0);
  return out;
}

OverfitOutcome experiment_overfit(const RunConfig& cfg, const Dataset& train,
                                  const Dataset& val) {
  if (!cfg.metrics.llc || !cfg.metrics.hessian)
    throw ConfigError("overfit needs both the llc and hessian metrics");
  if (cfg.metrics.cadence == 0)
    throw ConfigError("overfit needs a metric cadence > 0");

  OverfitOutcome out;
  out.run = run_training(cfg, train, val);

  std::vector<double> epochs, wbic, val_loss, lambda, trace;
  for (const auto& r : out.run.records) {
    if (!r.wbic || !r.lambda_hat || !r.hessian_trace) continue;
    epochs.push_back(static_cast<double>(r.epoch));
    wbic.push_back(*r.wbic);
    val_loss.push_back(r.val_loss);
    lambda.push_back(*r.lambda_hat);
    trace.push_back(*r.hessian_trace);
  }
  if (epochs.size() < 3)
    throw ConfigError("overfit run produced fewer than three metric epochs");
  out.spearman_wbic_val = stats::spearman_rho(wbic, val_loss);
  out.spearman_lambda_epoch = stats::spearman_rho(lambda, epochs);
  out.spearman_trace_epoch = stats::spearman_rho(trace, epochs);
  return out;
}

}  // namespace sltlab
