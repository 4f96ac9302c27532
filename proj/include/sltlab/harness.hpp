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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sltlab/data.hpp"
#include "sltlab/hessian.hpp"
#include "sltlab/nn.hpp"
#include "sltlab/optim.hpp"
#include "sltlab/slt.hpp"
#include "sltlab/stats.hpp"

namespace sltlab {

/// Where the training data comes from: an IDX file pair under the data
/// directory, or a synthetic Gaussian-blob problem.
struct DatasetSpec {
  std::string kind = "idx";  // "idx" | "synthetic"
  // idx:
  std::string images;
  std::string labels;
  std::size_t downsample_factor = 1;
  // synthetic:
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t classes = 0;
  double noise = 0.1;
  // shared:
  std::size_t train_count = 0;  // 0: 80% of the pool
  std::size_t val_count = 0;    // 0: the rest
  std::uint64_t seed = 0;       // shuffle/generation seed

  void validate() const;
};

TrainValSplit load_dataset(const DatasetSpec& spec,
                           const std::filesystem::path& data_dir);

struct OptimizerSettings {
  std::string method = "sgd";  // "sgd" | "ngd"
  double learning_rate = 1e-2;
  NgdConfig ngd;  // consulted when method == "ngd" (its learning_rate too)

  void validate() const;
};

/// Cadence semantics: train/val losses are recorded every epoch; the heavy
/// quantities (Hessian trace, sampler-based lambda/WBIC) run on epochs where
/// cadence > 0 && epoch % cadence == 0, and always on the final epoch while
/// their toggle is on. Toggles off means never.
struct MetricsConfig {
  std::size_t cadence = 0;
  std::size_t metric_batch = 512;  // head-of-train batch for the Hessian trace
  bool hessian = true;
  bool llc = true;
  HutchinsonConfig hutchinson{.num_probes = 1000};
  SgldConfig sgld{.num_draws = 1000};
  std::size_t sgld_minibatch = 128;

  void validate() const;
};

struct RunConfig {
  MlpArchitecture arch;  // input_dim/output_classes 0 = infer from data
  OptimizerSettings optimizer;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  MetricsConfig metrics;
  // Set by the fork experiment: resume from these parameters at this epoch.
  std::size_t start_epoch = 0;
  std::optional<ParamVector> init_params;

  void validate() const;
};

/// One row of the training log. Optionals are empty on epochs where the
/// quantity was not computed (or does not apply, e.g. kappa under SGD).
struct MetricsRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> update_norm;    // mean ||w' - w|| over the epoch
  std::optional<double> lambda_hat;
  std::optional<double> lambda_se;
  std::optional<double> wbic;
  std::optional<double> hessian_trace;
  std::optional<double> hessian_se;
  std::optional<double> kappa_mean;     // mean damping over the epoch (ngd)
};

struct RunResult {
  std::vector<MetricsRecord> records;
  ParamVector final_params;
  MlpArchitecture arch;  // resolved against the data
  double wall_seconds = 0.0;
};

using RecordCallback = std::function<void(const MetricsRecord&)>;

/// Trains for cfg.epochs epochs, logging one record per epoch plus a
/// baseline record for the starting state. The callback fires as each record
/// is produced, so callers that stream rows to disk keep everything up to
/// the failure point if a later epoch throws.
RunResult run_training(const RunConfig& cfg, const Dataset& train,
                       const Dataset& val, const RecordCallback& on_record = {});

/// Matched SGD-vs-NGD comparison: one run per optimizer per seed (seed i
/// uses identical init and batch order in both arms), then a one-sided
/// Welch test on the final lambda_hat values, H1: mean(ngd) > mean(sgd).
struct CompareOutcome {
  std::vector<std::uint64_t> seeds;
  std::vector<double> sgd_lambda;
  std::vector<double> ngd_lambda;
  std::vector<RunResult> sgd_runs;
  std::vector<RunResult> ngd_runs;
  stats::WelchResult welch;
  double wall_seconds = 0.0;
};

CompareOutcome experiment_compare(const RunConfig& base, const Dataset& train,
                                  const Dataset& val,
                                  std::span<const std::uint64_t> seeds);

/// Damping sweep: NGD at each alpha (per seed) plus an SGD baseline per
/// seed; spearman is the rank correlation of (alpha, final lambda_hat)
/// over all pooled NGD runs.
struct SweepPoint {
  double alpha = 0.0;
  std::vector<double> lambda_per_seed;
  double lambda_mean = 0.0;
};

struct SweepOutcome {
  std::vector<SweepPoint> points;
  std::vector<double> sgd_lambda;
  double spearman = 0.0;
  double wall_seconds = 0.0;
};

SweepOutcome experiment_sweep(const RunConfig& base, const Dataset& train,
                              const Dataset& val,
                              std::span<const double> alphas,
                              std::span<const std::uint64_t> seeds);

/// Trains SGD to fork_epoch, then continues two branches from the same
/// parameters: one switching to NGD, one staying on SGD with the learning
/// rate scaled by control_lr_scale (a step-size control). Trends are
/// lambda_hat against epoch over each branch's metric epochs.
struct ForkOutcome {
  std::vector<MetricsRecord> base_records;
  std::vector<MetricsRecord> ngd_records;
  std::vector<MetricsRecord> control_records;
  stats::LineFit ngd_trend;
  stats::LineFit control_trend;
  double wall_seconds = 0.0;
};

ForkOutcome experiment_fork(const RunConfig& base, const Dataset& train,
                            const Dataset& val, std::size_t fork_epoch,
                            double control_lr_scale);

/// Long small-data run watched for overfitting: rank correlations of WBIC
/// against validation loss, and of lambda_hat / Hessian trace against epoch,
/// over the metric epochs.
struct OverfitOutcome {
  RunResult run;
  double spearman_wbic_val = 0.0;
  double spearman_lambda_epoch = 0.0;
  double spearman_trace_epoch = 0.0;
};

OverfitOutcome experiment_overfit(const RunConfig& cfg, const Dataset& train,
                                  const Dataset& val);

// --- serialization ---------------------------------------------------------

/// Pinned column order of the training log.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& r);
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsRecord> records);
std::vector<MetricsRecord> parse_metrics_csv(const std::filesystem::path& path);
void write_metrics_json(const std::filesystem::path& path,
                        std::span<const MetricsRecord> records);

nlohmann::json to_json(const DatasetSpec& spec);
nlohmann::json to_json(const RunConfig& cfg);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Run provenance: resolved config, seed, code version, timing.
void write_manifest(const std::filesystem::path& path,
                    const std::string& command, const RunConfig& cfg,
                    const DatasetSpec& dataset, double wall_seconds,
                    const std::vector<std::string>& outputs);

}  // namespace sltlab
