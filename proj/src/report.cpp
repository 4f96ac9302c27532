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

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sltlab/harness.hpp"

#ifndef SLTLAB_GIT_VERSION
#define SLTLAB_GIT_VERSION "unknown"
#endif

namespace sltlab {

namespace {

using nlohmann::json;

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_g17(*v) : std::string();
}

void check_keys(const json& j, const std::string& what,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + what);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

}  // namespace

void DatasetSpec::validate() const {
  if (kind == "idx") {
    if (images.empty() || labels.empty())
      throw ConfigError("idx dataset needs 'images' and 'labels' filenames");
    if (downsample_factor == 0)
      throw ConfigError("downsample_factor must be > 0");
  } else if (kind == "synthetic") {
    if (n == 0 || dim == 0 || classes < 2)
      throw ConfigError("synthetic dataset needs n, dim and classes >= 2");
  } else {
    throw ConfigError("dataset kind '" + kind + "' (want idx or synthetic)");
  }
}

TrainValSplit load_dataset(const DatasetSpec& spec,
                           const std::filesystem::path& data_dir) {
  spec.validate();
  Dataset pool;
  if (spec.kind == "idx") {
    pool = load_idx(data_dir / spec.images, data_dir / spec.labels);
    if (spec.downsample_factor > 1)
      pool = downsample(pool, spec.downsample_factor);
  } else {
    pool = synthetic_classification(spec.n, spec.dim, spec.classes, spec.noise,
                                    derive_seed(spec.seed, 101));
  }
  SplitSpec s;
  s.train_count =
      spec.train_count > 0 ? spec.train_count : (pool.size() * 4) / 5;
  s.val_count = spec.val_count;
  s.seed = derive_seed(spec.seed, 102);
  return split(pool, s);
}

// --- metrics CSV / JSON ------------------------------------------------------

std::string metrics_csv_header() {
  return "epoch,train_loss,val_loss,update_norm,lambda_hat,lambda_se,wbic,"
         "hessian_trace,hessian_se,kappa_mean";
}

std::string metrics_csv_row(const MetricsRecord& r) {
  std::ostringstream os;
  os << r.epoch << ',' << fmt_g17(r.train_loss) << ',' << fmt_g17(r.val_loss)
     << ',' << fmt_opt(r.update_norm) << ',' << fmt_opt(r.lambda_hat) << ','
     << fmt_opt(r.lambda_se) << ',' << fmt_opt(r.wbic) << ','
     << fmt_opt(r.hessian_trace) << ',' << fmt_opt(r.hessian_se) << ','
     << fmt_opt(r.kappa_mean);
  return os.str();
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << metrics_csv_header() << '\n';
  for (const auto& r : records) out << metrics_csv_row(r) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<MetricsRecord> parse_metrics_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  if (line != metrics_csv_header())
    throw IoError(path.string() + " has an unexpected header: " + line);

  std::vector<MetricsRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 10)
      throw IoError(path.string() + ":" + std::to_string(lineno) +
                    ": expected 10 fields, got " +
                    std::to_string(fields.size()));
    auto num = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size())
        throw IoError(path.string() + ":" + std::to_string(lineno) +
                      ": bad number '" + s + "'");
      return v;
    };
    auto opt = [&](const std::string& s) {
      return s.empty() ? std::optional<double>() : std::optional(num(s));
    };
    MetricsRecord r;
    r.epoch = static_cast<std::size_t>(num(fields[0]));
    r.train_loss = num(fields[1]);
    r.val_loss = num(fields[2]);
    r.update_norm = opt(fields[3]);
    r.lambda_hat = opt(fields[4]);
    r.lambda_se = opt(fields[5]);
    r.wbic = opt(fields[6]);
    r.hessian_trace = opt(fields[7]);
    r.hessian_se = opt(fields[8]);
    r.kappa_mean = opt(fields[9]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_metrics_json(const std::filesystem::path& path,
                        std::span<const MetricsRecord> records) {
  json arr = json::array();
  for (const auto& r : records) {
    json row;
    row["epoch"] = r.epoch;
    row["train_loss"] = r.train_loss;
    row["val_loss"] = r.val_loss;
    auto put = [&row](const char* key, const std::optional<double>& v) {
      if (v) row[key] = *v;
    };
    put("update_norm", r.update_norm);
    put("lambda_hat", r.lambda_hat);
    put("lambda_se", r.lambda_se);
    put("wbic", r.wbic);
    put("hessian_trace", r.hessian_trace);
    put("hessian_se", r.hessian_se);
    put("kappa_mean", r.kappa_mean);
    arr.push_back(std::move(row));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << arr.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

// --- config JSON -------------------------------------------------------------

nlohmann::json to_json(const DatasetSpec& spec) {
  json j;
  j["kind"] = spec.kind;
  if (spec.kind == "idx") {
    j["images"] = spec.images;
    j["labels"] = spec.labels;
    if (spec.downsample_factor != 1)
      j["downsample_factor"] = spec.downsample_factor;
  } else {
    j["n"] = spec.n;
    j["dim"] = spec.dim;
    j["classes"] = spec.classes;
    j["noise"] = spec.noise;
  }
  if (spec.train_count) j["train_count"] = spec.train_count;
  if (spec.val_count) j["val_count"] = spec.val_count;
  j["seed"] = spec.seed;
  return j;
}

DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  check_keys(j, "dataset",
             {"kind", "images", "labels", "downsample_factor", "n", "dim",
              "classes", "noise", "train_count", "val_count", "seed"});
  DatasetSpec s;
  s.kind = get_or<std::string>(j, "kind", s.kind);
  s.images = get_or<std::string>(j, "images", s.images);
  s.labels = get_or<std::string>(j, "labels", s.labels);
  s.downsample_factor =
      get_or<std::size_t>(j, "downsample_factor", s.downsample_factor);
  s.n = get_or<std::size_t>(j, "n", s.n);
  s.dim = get_or<std::size_t>(j, "dim", s.dim);
  s.classes = get_or<std::size_t>(j, "classes", s.classes);
  s.noise = get_or<double>(j, "noise", s.noise);
  s.train_count = get_or<std::size_t>(j, "train_count", s.train_count);
  s.val_count = get_or<std::size_t>(j, "val_count", s.val_count);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  s.validate();
  return s;
}

nlohmann::json to_json(const RunConfig& cfg) {
  json arch;
  arch["input_dim"] = cfg.arch.input_dim;
  arch["hidden"] = cfg.arch.hidden_layers;
  arch["output_classes"] = cfg.arch.output_classes;
  arch["activation"] = to_string(cfg.arch.activation);

  json opt;
  opt["method"] = cfg.optimizer.method;
  opt["learning_rate"] = cfg.optimizer.learning_rate;
  if (cfg.optimizer.method == "ngd") {
    opt["alpha"] = cfg.optimizer.ngd.alpha;
    opt["eps_smooth"] = cfg.optimizer.ngd.eps_smooth;
    opt["solver"] = to_string(cfg.optimizer.ngd.solver);
    opt["cg_tol"] = cfg.optimizer.ngd.cg_tol;
    if (cfg.optimizer.ngd.cg_max_iters)
      opt["cg_max_iters"] = cfg.optimizer.ngd.cg_max_iters;
  }

  json metrics;
  metrics["cadence"] = cfg.metrics.cadence;
  metrics["metric_batch"] = cfg.metrics.metric_batch;
  metrics["hessian"] = cfg.metrics.hessian;
  metrics["llc"] = cfg.metrics.llc;
  metrics["hutchinson"] = {
      {"num_probes", cfg.metrics.hutchinson.num_probes},
      {"probe", to_string(cfg.metrics.hutchinson.probe)}};
  json sgld;
  sgld["step_size"] = cfg.metrics.sgld.step_size;
  sgld["gamma"] = cfg.metrics.sgld.gamma;
  sgld["chains"] = cfg.metrics.sgld.num_chains;
  sgld["draws"] = cfg.metrics.sgld.num_draws;
  sgld["burn_in"] = cfg.metrics.sgld.burn_in;
  sgld["beta"] = cfg.metrics.sgld.beta;
  sgld["divergence_radius"] = cfg.metrics.sgld.divergence_radius;
  sgld["minibatch"] = cfg.metrics.sgld_minibatch;
  metrics["sgld"] = std::move(sgld);

  json j;
  j["arch"] = std::move(arch);
  j["optimizer"] = std::move(opt);
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["metrics"] = std::move(metrics);
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  check_keys(j, "run",
             {"arch", "optimizer", "epochs", "batch_size", "seed", "metrics"});
  RunConfig cfg;

  if (j.contains("arch")) {
    const json& a = j.at("arch");
    check_keys(a, "run.arch",
               {"input_dim", "hidden", "output_classes", "activation"});
    cfg.arch.input_dim = get_or<std::size_t>(a, "input_dim", 0);
    cfg.arch.hidden_layers = get_or<std::vector<std::size_t>>(
        a, "hidden", cfg.arch.hidden_layers);
    cfg.arch.output_classes = get_or<std::size_t>(a, "output_classes", 0);
    cfg.arch.activation = activation_from_string(
        get_or<std::string>(a, "activation", "relu"));
  }

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    check_keys(o, "run.optimizer",
               {"method", "learning_rate", "alpha", "eps_smooth", "solver",
                "cg_tol", "cg_max_iters"});
    auto& opt = cfg.optimizer;
    opt.method = get_or<std::string>(o, "method", opt.method);
    opt.learning_rate = get_or<double>(o, "learning_rate", opt.learning_rate);
    opt.ngd.learning_rate = opt.learning_rate;
    opt.ngd.alpha = get_or<double>(o, "alpha", opt.ngd.alpha);
    opt.ngd.eps_smooth = get_or<double>(o, "eps_smooth", opt.ngd.eps_smooth);
    opt.ngd.solver =
        fisher_solver_from_string(get_or<std::string>(o, "solver", "cg"));
    opt.ngd.cg_tol = get_or<double>(o, "cg_tol", opt.ngd.cg_tol);
    opt.ngd.cg_max_iters =
        get_or<std::size_t>(o, "cg_max_iters", opt.ngd.cg_max_iters);
  }

  cfg.epochs = get_or<std::size_t>(j, "epochs", cfg.epochs);
  cfg.batch_size = get_or<std::size_t>(j, "batch_size", cfg.batch_size);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);

  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    check_keys(m, "run.metrics",
               {"cadence", "metric_batch", "hessian", "llc", "hutchinson",
                "sgld"});
    auto& mc = cfg.metrics;
    mc.cadence = get_or<std::size_t>(m, "cadence", mc.cadence);
    mc.metric_batch = get_or<std::size_t>(m, "metric_batch", mc.metric_batch);
    mc.hessian = get_or<bool>(m, "hessian", mc.hessian);
    mc.llc = get_or<bool>(m, "llc", mc.llc);
    if (m.contains("hutchinson")) {
      const json& h = m.at("hutchinson");
      check_keys(h, "run.metrics.hutchinson", {"num_probes", "probe"});
      mc.hutchinson.num_probes =
          get_or<std::size_t>(h, "num_probes", mc.hutchinson.num_probes);
      mc.hutchinson.probe = probe_kind_from_string(
          get_or<std::string>(h, "probe", to_string(mc.hutchinson.probe)));
    }
    if (m.contains("sgld")) {
      const json& s = m.at("sgld");
      check_keys(s, "run.metrics.sgld",
                 {"step_size", "gamma", "chains", "draws", "burn_in", "beta",
                  "divergence_radius", "minibatch"});
      mc.sgld.step_size = get_or<double>(s, "step_size", mc.sgld.step_size);
      mc.sgld.gamma = get_or<double>(s, "gamma", mc.sgld.gamma);
      mc.sgld.num_chains =
          get_or<std::size_t>(s, "chains", mc.sgld.num_chains);
      mc.sgld.num_draws = get_or<std::size_t>(s, "draws", mc.sgld.num_draws);
      mc.sgld.burn_in = get_or<std::size_t>(s, "burn_in", mc.sgld.burn_in);
      mc.sgld.beta = get_or<double>(s, "beta", mc.sgld.beta);
      mc.sgld.divergence_radius =
          get_or<double>(s, "divergence_radius", mc.sgld.divergence_radius);
      mc.sgld_minibatch =
          get_or<std::size_t>(s, "minibatch", mc.sgld_minibatch);
    }
  }
  cfg.validate();
  return cfg;
}

void write_manifest(const std::filesystem::path& path,
                    const std::string& command, const RunConfig& cfg,
                    const DatasetSpec& dataset, double wall_seconds,
                    const std::vector<std::string>& outputs) {
  json j;
  j["command"] = command;
  j["version"] = SLTLAB_GIT_VERSION;
  j["dataset"] = to_json(dataset);
  j["run"] = to_json(cfg);
  j["seed"] = cfg.seed;
  j["wall_seconds"] = wall_seconds;
  j["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sltlab
