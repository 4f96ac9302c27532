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
// End-to-end checks of the command-line binary: exit codes, produced files,
// and rerun determinism. The binary path comes in through SLTLAB_BIN.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(SLTLAB_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "sltlab_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json tiny_train_config() {
  json cfg;
  cfg["dataset"] = {{"kind", "synthetic"}, {"n", 80},    {"dim", 4},
                    {"classes", 3},        {"noise", 0.3}, {"train_count", 60},
                    {"seed", 5}};
  cfg["run"] = {
      {"arch", {{"hidden", {6}}, {"activation", "tanh"}}},
      {"optimizer", {{"method", "sgd"}, {"learning_rate", 0.05}}},
      {"epochs", 2},
      {"batch_size", 16},
      {"seed", 11},
      {"metrics",
       {{"cadence", 0},
        {"metric_batch", 32},
        {"hutchinson", {{"num_probes", 40}}},
        {"sgld",
         {{"chains", 2}, {"draws", 40}, {"burn_in", 10}, {"minibatch", 16}}}}}};
  return cfg;
}

}  // namespace

TEST_CASE("usage and argument errors") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("train --help") == 0);
  CHECK(run_cli("") == 2);              // a subcommand is required
  CHECK(run_cli("frobnicate") == 2);    // unknown subcommand
  CHECK(run_cli("train --bogus 1") == 2);
}

TEST_CASE("config errors exit 2") {
  const auto dir = fresh_dir("config_errors");
  CHECK(run_cli("train --out-dir " + (dir / "out").string()) == 2);  // no dataset

  const auto bad = dir / "bad.json";
  write_text(bad, "{ not json");
  CHECK(run_cli("train --config " + bad.string()) == 2);

  const auto unknown = dir / "unknown.json";
  write_text(unknown, R"({"surprise": 1})");
  CHECK(run_cli("train --config " + unknown.string()) == 2);

  CHECK(run_cli("train --config " + (dir / "missing.json").string()) == 2);
}

TEST_CASE("train writes metrics and manifest, reruns byte-identically") {
  const auto dir = fresh_dir("train");
  const auto cfg_path = dir / "cfg.json";
  write_text(cfg_path, tiny_train_config().dump());

  const auto out1 = dir / "out1";
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                out1.string()) == 0);
  CHECK(fs::exists(out1 / "metrics.csv"));
  CHECK(fs::exists(out1 / "manifest.json"));

  const auto out2 = dir / "out2";
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                out2.string()) == 0);
  CHECK(slurp(out1 / "metrics.csv") == slurp(out2 / "metrics.csv"));

  // json format adds a metrics.json alongside the csv
  const auto out3 = dir / "out3";
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                out3.string() + " --format json") == 0);
  CHECK(fs::exists(out3 / "metrics.json"));

  std::ifstream in(out1 / "manifest.json");
  const json manifest = json::parse(in);
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("seed") == 11);
}

TEST_CASE("seed override lands in the manifest and changes the log") {
  const auto dir = fresh_dir("seed_override");
  const auto cfg_path = dir / "cfg.json";
  write_text(cfg_path, tiny_train_config().dump());

  const auto base = dir / "base";
  const auto other = dir / "other";
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                base.string()) == 0);
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                other.string() + " --seed 99") == 0);

  std::ifstream in(other / "manifest.json");
  const json manifest = json::parse(in);
  CHECK(manifest.at("seed") == 99);
  CHECK(slurp(base / "metrics.csv") != slurp(other / "metrics.csv"));
}

TEST_CASE("diverging sampler exits 3 but keeps the rows already logged") {
  const auto dir = fresh_dir("divergence");
  json cfg = tiny_train_config();
  cfg["run"]["epochs"] = 1;
  cfg["run"]["metrics"]["sgld"]["step_size"] = 10.0;  // guaranteed blow-up
  const auto cfg_path = dir / "cfg.json";
  write_text(cfg_path, cfg.dump());

  const auto out = dir / "out";
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                out.string()) == 3);
  // the baseline row was streamed before the final-epoch metrics threw
  const std::string csv = slurp(out / "metrics.csv");
  CHECK(csv.find("\n0,") != std::string::npos);
}

TEST_CASE("llc subcommand reports sampler and volume estimates") {
  const auto dir = fresh_dir("llc");
  json cfg;
  cfg["run"] = {
      {"seed", 7},
      {"metrics",
       {{"sgld", {{"chains", 2}, {"draws", 300}, {"burn_in", 50}}}}}};
  cfg["llc"] = {{"potential", "quadratic-1d"},
                {"volume_samples", 200000},
                {"epsilons", {1e-3, 1e-2, 1e-1}}};
  const auto cfg_path = dir / "cfg.json";
  write_text(cfg_path, cfg.dump());

  const auto out = dir / "out";
  CHECK(run_cli("llc --config " + cfg_path.string() + " --out-dir " +
                out.string()) == 0);
  std::ifstream in(out / "llc.json");
  const json summary = json::parse(in);
  CHECK(summary.at("potential") == "quadratic-1d");
  CHECK(summary.at("lambda_hat").get<double>() > 0.0);
  CHECK(summary.at("volume_points").size() == 3);
  // analytic exponent of the 1-d quadratic is 1/2
  CHECK(summary.at("volume_slope").get<double>() > 0.3);
  CHECK(summary.at("volume_slope").get<double>() < 0.7);
}

TEST_CASE("trace subcommand writes its estimate") {
  const auto dir = fresh_dir("trace");
  json cfg = tiny_train_config();
  cfg.erase("run");
  cfg["run"] = {{"arch", {{"hidden", {6}}, {"activation", "tanh"}}},
                {"seed", 3},
                {"metrics", {{"metric_batch", 32}}}};
  cfg["trace"] = {{"num_probes", 50}};
  const auto cfg_path = dir / "cfg.json";
  write_text(cfg_path, cfg.dump());

  const auto out = dir / "out";
  CHECK(run_cli("trace --config " + cfg_path.string() + " --out-dir " +
                out.string()) == 0);
  std::ifstream in(out / "trace.json");
  const json summary = json::parse(in);
  CHECK(summary.at("num_probes") == 50);
  CHECK(summary.at("probe") == "gaussian");
}

TEST_CASE("idx data resolves against --data-dir") {
  const auto dir = fresh_dir("data_dir");
  json cfg = tiny_train_config();
  cfg["dataset"] = {{"kind", "idx"},
                    {"images", "digits-images-idx3-ubyte"},
                    {"labels", "digits-labels-idx1-ubyte"},
                    {"train_count", 100},
                    {"val_count", 50},
                    {"seed", 1}};
  cfg["run"]["metrics"]["hessian"] = false;
  cfg["run"]["metrics"]["llc"] = false;
  cfg["run"]["epochs"] = 1;
  const auto cfg_path = dir / "cfg.json";
  write_text(cfg_path, cfg.dump());

  const auto out = dir / "out";
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                out.string() + " --data-dir " + SLTLAB_TEST_DATA_DIR) == 0);
  CHECK(fs::exists(out / "metrics.csv"));

  // pointing at an empty directory must fail cleanly
  const auto empty = dir / "empty";
  fs::create_directories(empty);
  CHECK(run_cli("train --config " + cfg_path.string() + " --out-dir " +
                (dir / "out2").string() + " --data-dir " + empty.string()) ==
        2);
}
