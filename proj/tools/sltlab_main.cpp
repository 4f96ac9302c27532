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
//
// Command-line front end: train a classifier while logging degeneracy
// metrics, or run one of the canned experiments (optimizer comparison,
// damping sweep, mid-run optimizer fork, overfitting watch, sampler and
// trace sanity checks).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sltlab/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::string config_path;
  fs::path out_dir = "out";
  fs::path data_dir;
  std::string format = "csv";
  std::optional<std::uint64_t> seed_override;
};

json load_config(const GlobalOpts& g) {
  if (g.config_path.empty()) return json::object();
  std::ifstream in(g.config_path);
  if (!in) throw sltlab::IoError("cannot open config " + g.config_path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw sltlab::ConfigError("config " + g.config_path + ": " + e.what());
  }
}

const json& section(const json& cfg, const char* name, json& storage) {
  static const std::vector<std::string> known = {
      "dataset", "run", "compare", "sweep", "fork", "llc", "trace"};
  for (const auto& [key, value] : cfg.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw sltlab::ConfigError("unknown top-level config key '" + key + "'");
  }
  if (cfg.contains(name)) return cfg.at(name);
  storage = json::object();
  return storage;
}

sltlab::RunConfig parse_run(const json& cfg, const GlobalOpts& g) {
  json empty;
  sltlab::RunConfig run =
      sltlab::run_config_from_json(section(cfg, "run", empty));
  if (g.seed_override) run.seed = *g.seed_override;
  return run;
}

sltlab::DatasetSpec parse_dataset(const json& cfg) {
  if (!cfg.contains("dataset"))
    throw sltlab::ConfigError(
        "this command needs a 'dataset' section in the config");
  return sltlab::dataset_spec_from_json(cfg.at("dataset"));
}

fs::path resolve_data_dir(const GlobalOpts& g) {
  if (!g.data_dir.empty()) return g.data_dir;
  if (const char* env = std::getenv("SLTLAB_DATA_DIR")) return env;
  return "data";
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw sltlab::IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw sltlab::IoError("failed writing " + path.string());
}

// Streams rows into <stem>.csv as they are produced, so an aborted run keeps
// the rows up to the failure.
class CsvSink {
 public:
  CsvSink(const fs::path& path) : path_(path), out_(path) {
    if (!out_) throw sltlab::IoError("cannot write " + path.string());
    out_ << sltlab::metrics_csv_header() << '\n';
    out_.flush();
  }
  sltlab::RecordCallback callback() {
    return [this](const sltlab::MetricsRecord& r) {
      out_ << sltlab::metrics_csv_row(r) << '\n';
      out_.flush();
    };
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

int cmd_train(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto spec = parse_dataset(cfg);
  const auto run_cfg = parse_run(cfg, g);
  const auto data = sltlab::load_dataset(spec, resolve_data_dir(g));

  fs::create_directories(g.out_dir);
  CsvSink sink(g.out_dir / "metrics.csv");
  const auto result =
      sltlab::run_training(run_cfg, data.train, data.val, sink.callback());

  std::vector<std::string> outputs = {"metrics.csv", "manifest.json"};
  if (g.format == "json") {
    sltlab::write_metrics_json(g.out_dir / "metrics.json", result.records);
    outputs.push_back("metrics.json");
  }
  sltlab::write_manifest(g.out_dir / "manifest.json", "train", run_cfg, spec,
                         result.wall_seconds, outputs);

  const auto& last = result.records.back();
  std::cout << "trained " << result.arch.label() << " for " << run_cfg.epochs
            << " epochs (" << result.wall_seconds << " s): train_loss "
            << last.train_loss << ", val_loss " << last.val_loss;
  if (last.lambda_hat) std::cout << ", lambda_hat " << *last.lambda_hat;
  if (last.hessian_trace)
    std::cout << ", hessian_trace " << *last.hessian_trace;
  std::cout << "\nwrote " << (g.out_dir / "metrics.csv").string() << std::endl;
  return 0;
}

std::vector<std::uint64_t> parse_seeds(const json& sec, const char* what) {
  if (!sec.contains("seeds"))
    throw sltlab::ConfigError(std::string(what) + " needs a 'seeds' array");
  const auto seeds = sec.at("seeds").get<std::vector<std::uint64_t>>();
  if (seeds.empty())
    throw sltlab::ConfigError(std::string(what) + " needs >= 1 seed");
  return seeds;
}

int cmd_compare(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto spec = parse_dataset(cfg);
  const auto run_cfg = parse_run(cfg, g);
  json empty;
  const json& sec = section(cfg, "compare", empty);
  for (const auto& [key, value] : sec.items()) {
    (void)value;
    if (key != "seeds")
      throw sltlab::ConfigError("unknown key '" + key + "' in compare");
  }
  const auto seeds = parse_seeds(sec, "compare");

  const auto data = sltlab::load_dataset(spec, resolve_data_dir(g));
  const auto out =
      sltlab::experiment_compare(run_cfg, data.train, data.val, seeds);

  fs::create_directories(g.out_dir);
  std::vector<std::string> outputs = {"compare.json", "manifest.json"};
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto tag = std::to_string(seeds[i]);
    sltlab::write_metrics_csv(g.out_dir / ("sgd_seed" + tag + ".csv"),
                              out.sgd_runs[i].records);
    sltlab::write_metrics_csv(g.out_dir / ("ngd_seed" + tag + ".csv"),
                              out.ngd_runs[i].records);
    outputs.push_back("sgd_seed" + tag + ".csv");
    outputs.push_back("ngd_seed" + tag + ".csv");
  }
  json summary;
  summary["seeds"] = out.seeds;
  summary["sgd_lambda"] = out.sgd_lambda;
  summary["ngd_lambda"] = out.ngd_lambda;
  summary["welch_t"] = out.welch.t;
  summary["welch_df"] = out.welch.df;
  summary["p_value"] = out.welch.p;
  summary["wall_seconds"] = out.wall_seconds;
  write_json_file(g.out_dir / "compare.json", summary);
  sltlab::write_manifest(g.out_dir / "manifest.json", "compare", run_cfg, spec,
                         out.wall_seconds, outputs);

  std::cout << "compare over " << seeds.size()
            << " seeds: mean lambda_hat sgd "
            << sltlab::stats::mean(out.sgd_lambda) << ", ngd "
            << sltlab::stats::mean(out.ngd_lambda) << ", one-sided p "
            << out.welch.p << " (" << out.wall_seconds << " s)" << std::endl;
  return 0;
}

int cmd_sweep(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto spec = parse_dataset(cfg);
  const auto run_cfg = parse_run(cfg, g);
  json empty;
  const json& sec = section(cfg, "sweep", empty);
  for (const auto& [key, value] : sec.items()) {
    (void)value;
    if (key != "seeds" && key != "alphas")
      throw sltlab::ConfigError("unknown key '" + key + "' in sweep");
  }
  if (!sec.contains("alphas"))
    throw sltlab::ConfigError("sweep needs an 'alphas' array");
  const auto alphas = sec.at("alphas").get<std::vector<double>>();
  const auto seeds = parse_seeds(sec, "sweep");

  const auto data = sltlab::load_dataset(spec, resolve_data_dir(g));
  const auto out =
      sltlab::experiment_sweep(run_cfg, data.train, data.val, alphas, seeds);

  fs::create_directories(g.out_dir);
  json summary;
  summary["alphas"] = alphas;
  summary["seeds"] = seeds;
  json points = json::array();
  for (const auto& pt : out.points) {
    points.push_back({{"alpha", pt.alpha},
                      {"lambda_per_seed", pt.lambda_per_seed},
                      {"lambda_mean", pt.lambda_mean}});
  }
  summary["points"] = std::move(points);
  summary["sgd_lambda"] = out.sgd_lambda;
  summary["spearman"] = out.spearman;
  summary["wall_seconds"] = out.wall_seconds;
  write_json_file(g.out_dir / "sweep.json", summary);
  sltlab::write_manifest(g.out_dir / "manifest.json", "sweep", run_cfg, spec,
                         out.wall_seconds, {"sweep.json", "manifest.json"});

  std::cout << "sweep over " << alphas.size() << " damping values: spearman("
            << "alpha, lambda_hat) = " << out.spearman << " ("
            << out.wall_seconds << " s)" << std::endl;
  return 0;
}

int cmd_fork(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto spec = parse_dataset(cfg);
  const auto run_cfg = parse_run(cfg, g);
  json empty;
  const json& sec = section(cfg, "fork", empty);
  for (const auto& [key, value] : sec.items()) {
    (void)value;
    if (key != "fork_epoch" && key != "control_lr_scale")
      throw sltlab::ConfigError("unknown key '" + key + "' in fork");
  }
  if (!sec.contains("fork_epoch"))
    throw sltlab::ConfigError("fork needs 'fork_epoch'");
  const auto fork_epoch = sec.at("fork_epoch").get<std::size_t>();
  const double control_lr_scale =
      sec.contains("control_lr_scale")
          ? sec.at("control_lr_scale").get<double>()
          : 1.0;

  const auto data = sltlab::load_dataset(spec, resolve_data_dir(g));
  const auto out = sltlab::experiment_fork(run_cfg, data.train, data.val,
                                           fork_epoch, control_lr_scale);

  fs::create_directories(g.out_dir);
  sltlab::write_metrics_csv(g.out_dir / "base.csv", out.base_records);
  sltlab::write_metrics_csv(g.out_dir / "ngd_branch.csv", out.ngd_records);
  sltlab::write_metrics_csv(g.out_dir / "control_branch.csv",
                            out.control_records);
  json summary;
  summary["fork_epoch"] = fork_epoch;
  summary["control_lr_scale"] = control_lr_scale;
  summary["ngd_slope"] = out.ngd_trend.slope;
  summary["ngd_slope_se"] = out.ngd_trend.slope_se;
  summary["ngd_slope_p_positive"] = out.ngd_trend.p_slope_positive();
  summary["control_slope"] = out.control_trend.slope;
  summary["control_slope_se"] = out.control_trend.slope_se;
  summary["wall_seconds"] = out.wall_seconds;
  write_json_file(g.out_dir / "fork.json", summary);
  sltlab::write_manifest(
      g.out_dir / "manifest.json", "fork", run_cfg, spec, out.wall_seconds,
      {"base.csv", "ngd_branch.csv", "control_branch.csv", "fork.json",
       "manifest.json"});

  std::cout << "fork at epoch " << fork_epoch << ": lambda_hat slope ngd "
            << out.ngd_trend.slope << " +- " << out.ngd_trend.slope_se
            << ", control " << out.control_trend.slope << " +- "
            << out.control_trend.slope_se << " (" << out.wall_seconds << " s)"
            << std::endl;
  return 0;
}

int cmd_overfit(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto spec = parse_dataset(cfg);
  const auto run_cfg = parse_run(cfg, g);

  const auto data = sltlab::load_dataset(spec, resolve_data_dir(g));
  const auto out = sltlab::experiment_overfit(run_cfg, data.train, data.val);

  fs::create_directories(g.out_dir);
  sltlab::write_metrics_csv(g.out_dir / "metrics.csv", out.run.records);
  json summary;
  summary["spearman_wbic_val"] = out.spearman_wbic_val;
  summary["spearman_lambda_epoch"] = out.spearman_lambda_epoch;
  summary["spearman_trace_epoch"] = out.spearman_trace_epoch;
  summary["wall_seconds"] = out.run.wall_seconds;
  write_json_file(g.out_dir / "overfit.json", summary);
  sltlab::write_manifest(
      g.out_dir / "manifest.json", "overfit", run_cfg, spec,
      out.run.wall_seconds, {"metrics.csv", "overfit.json", "manifest.json"});

  std::cout << "overfit watch: spearman(wbic, val_loss) "
            << out.spearman_wbic_val << ", spearman(lambda_hat, epoch) "
            << out.spearman_lambda_epoch << ", spearman(trace, epoch) "
            << out.spearman_trace_epoch << std::endl;
  return 0;
}

int cmd_llc(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto run_cfg = parse_run(cfg, g);  // supplies sgld settings + seed
  json empty;
  const json& sec = section(cfg, "llc", empty);
  for (const auto& [key, value] : sec.items()) {
    (void)value;
    if (key != "potential" && key != "synthetic_n" &&
        key != "volume_samples" && key != "epsilons")
      throw sltlab::ConfigError("unknown key '" + key + "' in llc");
  }
  const std::string name = sec.contains("potential")
                               ? sec.at("potential").get<std::string>()
                               : "quadratic-2d";
  const auto synthetic_n =
      sec.contains("synthetic_n") ? sec.at("synthetic_n").get<std::size_t>()
                                  : std::size_t{10000};
  const auto volume_samples = sec.contains("volume_samples")
                                  ? sec.at("volume_samples").get<std::size_t>()
                                  : std::size_t{2000000};
  std::vector<double> epsilons =
      sec.contains("epsilons") ? sec.at("epsilons").get<std::vector<double>>()
                               : std::vector<double>{1e-3, 2e-3, 5e-3, 1e-2,
                                                     2e-2, 5e-2, 1e-1};

  const auto pot = sltlab::make_potential(name);
  sltlab::PotentialTarget target(pot.value, pot.gradient, pot.dim,
                                 synthetic_n);
  sltlab::SgldConfig sgld = run_cfg.metrics.sgld;
  sgld.seed = sltlab::derive_seed(run_cfg.seed, 4, 0);
  const sltlab::ParamVector center(pot.dim, 0.0);
  const auto est = sltlab::estimate_llc(target, center, sgld);

  const auto points =
      sltlab::volume_scan(pot, epsilons, volume_samples,
                          sltlab::derive_seed(run_cfg.seed, 5, 0));
  const auto fit = sltlab::log_log_fit(points);

  fs::create_directories(g.out_dir);
  json summary;
  summary["potential"] = name;
  summary["synthetic_n"] = synthetic_n;
  summary["beta"] = est.beta;
  summary["lambda_hat"] = est.lambda_hat;
  summary["lambda_se"] = est.lambda_se;
  summary["wbic"] = est.wbic;
  summary["volume_slope"] = fit.slope;
  summary["volume_slope_se"] = fit.slope_se;
  json pts = json::array();
  for (const auto& p : points)
    pts.push_back(
        {{"epsilon", p.epsilon}, {"volume", p.volume}, {"hits", p.hits}});
  summary["volume_points"] = std::move(pts);
  write_json_file(g.out_dir / "llc.json", summary);

  std::cout << name << ": sampler lambda_hat " << est.lambda_hat << " +- "
            << est.lambda_se << ", volume slope " << fit.slope << " +- "
            << fit.slope_se << std::endl;
  return 0;
}

int cmd_trace(const GlobalOpts& g) {
  const json cfg = load_config(g);
  const auto spec = parse_dataset(cfg);
  const auto run_cfg = parse_run(cfg, g);
  json empty;
  const json& sec = section(cfg, "trace", empty);
  for (const auto& [key, value] : sec.items()) {
    (void)value;
    if (key != "num_probes" && key != "probe")
      throw sltlab::ConfigError("unknown key '" + key + "' in trace");
  }

  const auto data = sltlab::load_dataset(spec, resolve_data_dir(g));
  sltlab::MlpArchitecture arch = run_cfg.arch;
  if (arch.input_dim == 0) arch.input_dim = data.train.feature_dim();
  if (arch.output_classes == 0) arch.output_classes = data.train.num_classes;
  const auto model = sltlab::MlpModel::random_init(
      arch, sltlab::derive_seed(run_cfg.seed, 1));

  sltlab::HutchinsonConfig h = run_cfg.metrics.hutchinson;
  if (sec.contains("num_probes"))
    h.num_probes = sec.at("num_probes").get<std::size_t>();
  if (sec.contains("probe"))
    h.probe =
        sltlab::probe_kind_from_string(sec.at("probe").get<std::string>());
  h.seed = sltlab::derive_seed(run_cfg.seed, 3, 0);

  const auto batch =
      sltlab::head_batch(data.train, run_cfg.metrics.metric_batch);
  const auto est = sltlab::hessian_trace(model, batch, h);

  fs::create_directories(g.out_dir);
  json summary;
  summary["arch"] = arch.label();
  summary["num_probes"] = est.num_probes;
  summary["probe"] = sltlab::to_string(h.probe);
  summary["trace"] = est.mean;
  summary["trace_se"] = est.se;
  write_json_file(g.out_dir / "trace.json", summary);

  std::cout << "hessian trace at init (" << arch.label() << "): " << est.mean
            << " +- " << est.se << " over " << est.num_probes << " probes"
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Train small classifiers while tracking posterior-degeneracy metrics "
      "(local learning coefficient, WBIC, Hessian trace)"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out-dir", g.out_dir, "output directory (default: out)");
  app.add_option("--data-dir", g.data_dir,
                 "dataset directory (default: $SLTLAB_DATA_DIR or ./data)");
  app.add_option("--format", g.format, "metrics format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  std::uint64_t seed_val = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_val, "override the run seed");

  auto* train = app.add_subcommand("train", "single training run");
  auto* compare =
      app.add_subcommand("compare", "SGD vs NGD over matched seeds");
  auto* sweep = app.add_subcommand("sweep", "NGD damping sweep");
  auto* fork =
      app.add_subcommand("fork", "switch optimizer mid-run vs control");
  auto* overfit =
      app.add_subcommand("overfit", "long run watched for overfitting");
  auto* llc = app.add_subcommand(
      "llc", "sampler + volume estimates on a known potential");
  auto* trace =
      app.add_subcommand("trace", "Hessian trace estimate at a seeded init");
  for (auto* sub : {train, compare, sweep, fork, overfit, llc, trace})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*seed_opt) g.seed_override = seed_val;

  try {
    if (train->parsed()) return cmd_train(g);
    if (compare->parsed()) return cmd_compare(g);
    if (sweep->parsed()) return cmd_sweep(g);
    if (fork->parsed()) return cmd_fork(g);
    if (overfit->parsed()) return cmd_overfit(g);
    if (llc->parsed()) return cmd_llc(g);
    if (trace->parsed()) return cmd_trace(g);
  } catch (const sltlab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return 3;
  } catch (const sltlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const sltlab::IoError& e) {
    std::cerr << "io error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
