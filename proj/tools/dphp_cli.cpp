// Copyright 2026 The dphp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// dphp command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dphp/dphp.hpp"

namespace {

namespace fs = std::filesystem;
using dphp::Json;

constexpr int kExitUser = 2;
constexpr int kExitRuntime = 3;

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) dphp::Fail(dphp::ErrorCode::kInvalidArgument, "cannot create " + dir + ": " + ec.message());
}

std::string Join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

dphp::ExperimentConfig Load(const std::string& path, std::vector<std::string> overrides,
                            const std::optional<uint64_t>& seed) {
  if (seed) overrides.push_back("seed=" + std::to_string(*seed));
  return dphp::LoadExperiment(path, overrides);
}

int FeaturesBench(const std::string& config, const std::string& out_dir,
                  const std::vector<std::string>& overrides,
                  const std::optional<uint64_t>& seed) {
  const dphp::ExperimentConfig cfg = Load(config, overrides, seed);
  dphp::Require(cfg.task == dphp::Task::kFeaturesBench,
                "features-bench needs task features_bench");
  const dphp::BenchResult res = dphp::RunFeaturesBench(cfg.bench, cfg.seed);
  EnsureDir(out_dir);
  dphp::WriteBenchCsv(Join(out_dir, "hp_error.csv"), res.hp);
  dphp::WriteBenchCsv(Join(out_dir, "rf_error.csv"), res.rf);
  const Json resolved = dphp::ToJson(cfg);
  dphp::WriteJsonFile(Join(out_dir, "bench.json"),
                      Json{{"config_hash", dphp::ConfigHash(resolved)},
                           {"seed", cfg.seed},
                           {"length_scale", res.length_scale},
                           {"config", resolved}});
  std::cout << "wrote " << res.hp.size() << " HP rows and " << res.rf.size()
            << " Fourier rows to " << out_dir << "\n";
  return 0;
}

int Train(const std::string& config, const std::string& out_dir,
          const std::vector<std::string>& overrides, const std::optional<uint64_t>& seed) {
  const dphp::ExperimentConfig cfg = Load(config, overrides, seed);
  const dphp::TrainArtifacts art = dphp::RunTrain(cfg);
  EnsureDir(out_dir);
  dphp::WriteJsonFile(Join(out_dir, "checkpoint.json"), art.checkpoint);
  dphp::WriteJsonFile(Join(out_dir, "report.json"), art.report);
  dphp::WriteCsv(Join(out_dir, "samples.csv"), art.samples);
  std::cout << "config " << art.report["config_hash"].get<std::string>() << ", seed "
            << cfg.seed << ": wrote checkpoint.json, report.json, samples.csv to " << out_dir
            << "\n";
  return 0;
}

int Generate(const std::string& model, int64_t n, uint64_t seed, const std::string& out) {
  const dphp::Table t = dphp::GenerateFromCheckpoint(dphp::ReadJsonFile(model), n, seed);
  dphp::WriteCsv(out, t);
  return 0;
}

struct EvalArgs {
  std::string task;
  std::string real;
  std::string synth;
  std::string out;
  std::string config;
  int alpha = 3;
  int64_t max_subsets = 2000;
  uint64_t seed = 0;
  double radius = 0.0;
  int min_count = 3;
  std::string label = "label";
};

int Eval(const EvalArgs& a) {
  dphp::EvalRequest req;
  req.task = dphp::ParseEvalTask(a.task);
  req.alpha = a.alpha;
  req.max_subsets = a.max_subsets;
  req.seed = a.seed;
  req.coverage_radius = a.radius;
  req.coverage_min_count = a.min_count;
  req.label_column = a.label;
  if (!a.config.empty()) {
    const dphp::ExperimentConfig cfg = dphp::LoadExperiment(a.config);
    req.gmm = cfg.gmm;
    if (cfg.task == dphp::Task::kTabular && cfg.tabular.schema &&
        cfg.tabular.schema->label) {
      req.schema = cfg.tabular.schema;
    }
  }
  const Json report = dphp::RunEval(req, dphp::ReadCsv(a.real), dphp::ReadCsv(a.synth));
  dphp::WriteJsonFile(a.out, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

int Calibrate(double epsilon, double delta, int releases, const std::string& method,
              const std::string& out) {
  dphp::Require(releases >= 1, "releases must be at least 1");
  dphp::NoiseCalibration c =
      dphp::CalibrateSigma(epsilon, delta, dphp::CalibrationMethodFromName(method));
  const double single = c.sigma;
  c.sigma *= std::sqrt(static_cast<double>(releases));
  Json j = dphp::ToJson(c);
  j["releases"] = releases;
  j["single_release_sigma"] = single;
  if (!out.empty()) dphp::WriteJsonFile(out, j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  dphp::TuneAllocator();
  CLI::App app{"Differentially private synthetic data with Hermite-polynomial features"};
  app.require_subcommand(1);

  std::string config, out_dir, out_file;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;

  auto* bench = app.add_subcommand("features-bench", "Kernel approximation error of HP and Fourier features");
  bench->add_option("--config", config, "Experiment config (JSON)")->required();
  bench->add_option("--out", out_dir, "Output directory")->required();
  bench->add_option("--seed", seed, "Override the config seed");
  bench->add_option("--set", overrides, "Override a config key, e.g. bench.n=200");

  auto* train = app.add_subcommand("train", "Train a generator");
  train->add_option("--config", config, "Experiment config (JSON)")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--set", overrides, "Override a config key, e.g. train.epochs=10");

  std::string model;
  int64_t n = 0;
  uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "Sample from a trained checkpoint");
  gen->add_option("--model", model, "Checkpoint file")->required();
  gen->add_option("--n", n, "Number of samples")->required();
  gen->add_option("--seed", gen_seed, "Sampling seed")->required();
  gen->add_option("--out", out_file, "Output CSV")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score synthetic samples against real data");
  eval->add_option("--task", ev.task, "nll, marginals, coverage or downstream")
      ->required()
      ->check(CLI::IsMember({"nll", "marginals", "coverage", "downstream"}));
  eval->add_option("--real", ev.real, "Real CSV")->required();
  eval->add_option("--synth", ev.synth, "Synthetic CSV")->required();
  eval->add_option("--out", ev.out, "Output JSON")->required();
  eval->add_option("--alpha", ev.alpha, "Marginal order");
  eval->add_option("--max-subsets", ev.max_subsets, "Cap on evaluated column subsets");
  eval->add_option("--seed", ev.seed, "Subset sampling seed");
  eval->add_option("--radius", ev.radius, "Coverage radius, 0 means 2 sigma");
  eval->add_option("--min-count", ev.min_count, "Samples needed to cover a mode");
  eval->add_option("--label", ev.label, "Label column for downstream");
  eval->add_option("--config", ev.config, "Experiment config supplying mixture or schema");

  double epsilon = 0.0, delta = 0.0;
  int releases = 1;
  std::string method = "analytic";
  auto* cal = app.add_subcommand("calibrate", "Gaussian mechanism noise multiplier");
  cal->add_option("--epsilon", epsilon, "Epsilon")->required();
  cal->add_option("--delta", delta, "Delta")->required();
  cal->add_option("--releases", releases, "Number of composed releases");
  cal->add_option("--method", method, "classical or analytic")
      ->check(CLI::IsMember({"classical", "analytic"}));
  cal->add_option("--out", out_file, "Optional output JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUser;
  }

  try {
    if (*bench) return FeaturesBench(config, out_dir, overrides, seed);
    if (*train) return Train(config, out_dir, overrides, seed);
    if (*gen) return Generate(model, n, gen_seed, out_file);
    if (*eval) return Eval(ev);
    if (*cal) return Calibrate(epsilon, delta, releases, method, out_file);
  } catch (const dphp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.IsUserError() ? kExitUser : kExitRuntime;
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return kExitUser;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUser;
}
