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

// Config-driven experiment runs: the GMM and tabular training pipelines, the
// kernel-approximation benchmark, checkpoints and sample generation.

#ifndef DPHP_EXPERIMENT_HPP_
#define DPHP_EXPERIMENT_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "dphp/dataeval.hpp"
#include "dphp/error.hpp"
#include "dphp/featuremaps.hpp"
#include "dphp/generator.hpp"
#include "dphp/hermite.hpp"
#include "dphp/json_io.hpp"
#include "dphp/privacy.hpp"
#include "dphp/rng.hpp"

namespace dphp {

inline constexpr int kCheckpointVersion = 1;

// Training allocates and frees multi-megabyte feature matrices every step.
// Keeping them on the heap instead of mmap avoids a page-fault storm.
inline void TuneAllocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

enum class Task { kGmm2d, kTabular, kFeaturesBench };

inline const char* TaskName(Task t) {
  switch (t) {
    case Task::kGmm2d:
      return "gmm2d";
    case Task::kTabular:
      return "tabular";
    case Task::kFeaturesBench:
      return "features_bench";
  }
  return "unknown";
}

inline Task ParseTask(const std::string& name) {
  for (Task t : {Task::kGmm2d, Task::kTabular, Task::kFeaturesBench}) {
    if (name == TaskName(t)) return t;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown task: " + name);
}

struct GmmTask {
  double spacing = 1.0;
  double origin = 0.0;
  double sigma = 0.2;
  int64_t n_total = 10000;
  double test_fraction = 0.1;
  // The generator works on [0, 1]^2 spanning the mean grid +/- margin.
  double margin = 1.0;

  GmmSpec spec() const { return GmmSpec::Grid(spacing, origin, sigma); }
};

struct TabularTask {
  std::string csv;     // resolved path, empty when planted
  std::optional<TabularSchema> schema;
  std::optional<PlantedTableSpec> planted;
  int64_t planted_rows = 20000;
};

struct EvalOptions {
  int64_t num_generated = 5000;  // 0 means as many as training rows
  std::vector<int> alphas{3};
  int64_t max_subsets = 2000;
  double coverage_radius = 0.0;  // <= 0 means 2 sigma
  int coverage_min_count = 3;
};

struct BenchOptions {
  int n = 100;
  double mean_shift = 1.0;
  double length_scale = 0.0;  // <= 0 selects the median heuristic
  std::vector<int> hp_orders{1, 2, 3, 4, 5, 6, 8, 10, 15, 20};
  std::vector<int> rf_counts{10, 20, 50, 100, 200, 500, 1000};
  int redraws = 10;
};

struct ExperimentConfig {
  Task task = Task::kGmm2d;
  uint64_t seed = 0;
  GmmTask gmm;
  TabularTask tabular;
  TrainConfig train;
  EvalOptions eval;
  BenchOptions bench;
};

// ---------------------------------------------------------------------------
// Parsing.

namespace internal {

inline std::string ResolvePath(const std::string& path, const std::string& base_dir) {
  std::filesystem::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return p.lexically_normal().string();
}

inline void RequireFile(const std::string& path) {
  Require(std::filesystem::is_regular_file(path), "file does not exist: " + path);
}

inline void ReadPrivacy(const Json& j, TrainConfig& c) {
  if (j.is_string()) {
    Require(j.get<std::string>() == "non_private",
            "privacy must be \"non_private\" or an object");
    c.is_private = false;
    return;
  }
  ObjectReader r(j, "privacy");
  c.is_private = true;
  r.Read("epsilon", c.budget.epsilon_total);
  r.Read("delta", c.budget.delta_total);
  r.Read("split_fraction", c.budget.split_fraction);
  r.Read("label_budget_fraction", c.label_budget_fraction);
  r.Finish();
  Require(c.budget.epsilon_total > 0.0 && std::isfinite(c.budget.epsilon_total),
          "privacy.epsilon must be positive");
  Require(c.budget.delta_total > 0.0 && c.budget.delta_total < 1.0,
          "privacy.delta must lie in (0, 1)");
  Require(c.budget.split_fraction > 0.0 && c.budget.split_fraction < 1.0,
          "privacy.split_fraction must lie in (0, 1)");
}

}  // namespace internal

// Parses a config document. Relative file paths resolve against `base_dir`.
inline ExperimentConfig ParseExperiment(const Json& j, const std::string& base_dir = "") {
  ObjectReader r(j, "");
  ExperimentConfig cfg;
  cfg.task = ParseTask(r.Get<std::string>("task"));
  cfg.seed = r.Get<uint64_t>("seed", 0);
  cfg.train.seed = cfg.seed;

  if (r.Has("gmm")) {
    ObjectReader g = r.Child("gmm");
    g.Read("spacing", cfg.gmm.spacing);
    g.Read("origin", cfg.gmm.origin);
    g.Read("sigma", cfg.gmm.sigma);
    g.Read("n_total", cfg.gmm.n_total);
    g.Read("test_fraction", cfg.gmm.test_fraction);
    g.Read("margin", cfg.gmm.margin);
    g.Finish();
    Require(cfg.gmm.spacing > 0.0, "gmm.spacing must be positive");
    Require(cfg.gmm.n_total >= 50, "gmm.n_total must be at least 50");
    Require(cfg.gmm.test_fraction > 0.0 && cfg.gmm.test_fraction < 1.0,
            "gmm.test_fraction must lie in (0, 1)");
    Require(cfg.gmm.margin > 0.0, "gmm.margin must be positive");
    cfg.gmm.spec().Validate();
  }

  if (r.Has("tabular")) {
    ObjectReader t = r.Child("tabular");
    if (t.Has("csv")) {
      cfg.tabular.csv = internal::ResolvePath(t.Get<std::string>("csv"), base_dir);
      internal::RequireFile(cfg.tabular.csv);
    }
    if (t.Has("schema")) {
      const Json& s = t.At("schema");
      if (s.is_string()) {
        const std::string path = internal::ResolvePath(s.get<std::string>(), base_dir);
        internal::RequireFile(path);
        cfg.tabular.schema = SchemaFromJson(ReadJsonFile(path), path);
      } else {
        cfg.tabular.schema = SchemaFromJson(s, "tabular.schema");
      }
    }
    if (t.Has("planted")) {
      ObjectReader p = t.Child("planted");
      PlantedTableSpec spec;
      p.Read("cardinality", spec.cardinality);
      p.Read("parents", spec.parents);
      p.Read("copy_prob", spec.copy_prob);
      p.Read("rows", cfg.tabular.planted_rows);
      p.Finish();
      spec.Validate();
      Require(cfg.tabular.planted_rows >= 2, "tabular.planted.rows must be at least 2");
      cfg.tabular.planted = spec;
    }
    t.Finish();
  }

  if (r.Has("privacy")) internal::ReadPrivacy(r.At("privacy"), cfg.train);
  if (r.Has("features")) {
    ObjectReader f = r.Child("features");
    ReadTrainConfig(f, cfg.train);
    f.Finish();
  }
  if (r.Has("train")) {
    ObjectReader t = r.Child("train");
    ReadTrainConfig(t, cfg.train);
    t.Finish();
  }

  if (r.Has("eval")) {
    ObjectReader e = r.Child("eval");
    e.Read("num_generated", cfg.eval.num_generated);
    e.Read("alphas", cfg.eval.alphas);
    e.Read("max_subsets", cfg.eval.max_subsets);
    e.Read("coverage_radius", cfg.eval.coverage_radius);
    e.Read("coverage_min_count", cfg.eval.coverage_min_count);
    e.Finish();
    Require(cfg.eval.num_generated >= 0, "eval.num_generated must be non-negative");
    Require(cfg.eval.max_subsets >= 1, "eval.max_subsets must be positive");
    for (int a : cfg.eval.alphas) Require(a >= 1, "eval.alphas must be positive");
  }

  if (r.Has("bench")) {
    ObjectReader b = r.Child("bench");
    b.Read("n", cfg.bench.n);
    b.Read("mean_shift", cfg.bench.mean_shift);
    b.Read("length_scale", cfg.bench.length_scale);
    b.Read("hp_orders", cfg.bench.hp_orders);
    b.Read("rf_counts", cfg.bench.rf_counts);
    b.Read("redraws", cfg.bench.redraws);
    b.Finish();
  }
  r.Finish();

  switch (cfg.task) {
    case Task::kGmm2d:
      internal::ValidateConfig(cfg.train, 2);
      break;
    case Task::kTabular: {
      const bool from_csv = !cfg.tabular.csv.empty();
      Require(from_csv != cfg.tabular.planted.has_value(),
              "tabular task needs exactly one of tabular.csv or tabular.planted");
      if (from_csv) {
        Require(cfg.tabular.schema.has_value(), "tabular.csv needs tabular.schema");
      } else if (!cfg.tabular.schema) {
        cfg.tabular.schema = cfg.tabular.planted->Schema();
      }
      internal::ValidateConfig(cfg.train, cfg.tabular.schema->encoded_width());
      break;
    }
    case Task::kFeaturesBench:
      Require(cfg.bench.n >= 2, "bench.n must be at least 2");
      Require(!cfg.bench.hp_orders.empty(), "bench.hp_orders must not be empty");
      Require(!cfg.bench.rf_counts.empty(), "bench.rf_counts must not be empty");
      Require(cfg.bench.redraws >= 1, "bench.redraws must be positive");
      for (int c : cfg.bench.hp_orders) Require(c >= 0, "HP orders must be non-negative");
      for (int a : cfg.bench.rf_counts) {
        Require(a >= 2 && a % 2 == 0, "Fourier feature counts must be even");
      }
      break;
  }
  return cfg;
}

// Sets `path` (dot separated) in `j` to `value`, parsed as JSON when possible
// and kept as a string otherwise.
inline void ApplyOverride(Json& j, const std::string& path, const std::string& value) {
  Require(!path.empty(), "override needs a key");
  Json* node = &j;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    Require(!key.empty(), "malformed override key: " + path);
    if (dot == std::string::npos) {
      Json parsed = Json::parse(value, nullptr, false);
      (*node)[key] = parsed.is_discarded() ? Json(value) : parsed;
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = Json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline std::string ConfigHash(const Json& resolved) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, Fnv1a(resolved.dump()));
  return buf;
}

// Canonical form of a parsed config; its hash identifies a run.
inline Json ToJson(const ExperimentConfig& c) {
  Json j{{"task", TaskName(c.task)}, {"seed", c.seed}};
  switch (c.task) {
    case Task::kGmm2d:
      j["gmm"] = Json{{"spacing", c.gmm.spacing},
                      {"origin", c.gmm.origin},
                      {"sigma", c.gmm.sigma},
                      {"n_total", c.gmm.n_total},
                      {"test_fraction", c.gmm.test_fraction},
                      {"margin", c.gmm.margin}};
      break;
    case Task::kTabular: {
      Json t;
      if (!c.tabular.csv.empty()) t["csv"] = c.tabular.csv;
      if (c.tabular.planted) {
        t["planted"] = Json{{"cardinality", c.tabular.planted->cardinality},
                            {"parents", c.tabular.planted->parents},
                            {"copy_prob", c.tabular.planted->copy_prob},
                            {"rows", c.tabular.planted_rows}};
      }
      if (c.tabular.schema) t["schema"] = ToJson(*c.tabular.schema);
      j["tabular"] = std::move(t);
      break;
    }
    case Task::kFeaturesBench:
      j["bench"] = Json{{"n", c.bench.n},
                        {"mean_shift", c.bench.mean_shift},
                        {"length_scale", c.bench.length_scale},
                        {"hp_orders", c.bench.hp_orders},
                        {"rf_counts", c.bench.rf_counts},
                        {"redraws", c.bench.redraws}};
      return j;
  }
  if (c.train.is_private) {
    j["privacy"] = Json{{"epsilon", c.train.budget.epsilon_total},
                        {"delta", c.train.budget.delta_total},
                        {"split_fraction", c.train.budget.split_fraction},
                        {"label_budget_fraction", c.train.label_budget_fraction}};
  } else {
    j["privacy"] = "non_private";
  }
  j["train"] = ToJson(c.train);
  j["eval"] = Json{{"num_generated", c.eval.num_generated},
                   {"alphas", c.eval.alphas},
                   {"max_subsets", c.eval.max_subsets},
                   {"coverage_radius", c.eval.coverage_radius},
                   {"coverage_min_count", c.eval.coverage_min_count}};
  return j;
}

// Reads a config file and applies "key.path=value" overrides.
inline ExperimentConfig LoadExperiment(const std::string& path,
                                       const std::vector<std::string>& overrides = {}) {
  Json j = ReadJsonFile(path);
  for (const auto& o : overrides) {
    const size_t eq = o.find('=');
    Require(eq != std::string::npos, "override must look like key=value: " + o);
    ApplyOverride(j, o.substr(0, eq), o.substr(eq + 1));
  }
  return ParseExperiment(j, std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Checkpoints and generation.

// Decoded samples from a checkpoint. GMM checkpoints yield columns x0, x1,
// label; tabular ones yield the schema's columns.
inline Table GenerateFromCheckpoint(const Json& checkpoint, int64_t n, uint64_t seed) {
  Require(n >= 0, "sample count must be non-negative");
  ObjectReader r(checkpoint, "checkpoint");
  Require(r.Get<std::string>("format") == "dphp-checkpoint", "not a dphp checkpoint");
  const int version = r.Get<int>("version");
  if (version != kCheckpointVersion) {
    Fail(ErrorCode::kIncompatible,
         "unsupported checkpoint version " + std::to_string(version));
  }
  r.Get<std::string>("config_hash");
  r.Get<uint64_t>("seed");
  const Task task = ParseTask(r.Get<std::string>("task"));
  const GeneratorModel model = ModelFromJson(r.At("model"), "checkpoint.model");
  const LabelSampler sampler{r.Get<std::vector<double>>("label_probs")};
  Require(sampler.num_classes() == model.arch.num_classes,
          "checkpoint label probabilities disagree with the model");
  Rng rng = Substream(seed, "generate");
  GeneratedData gen = Generate(model, n, sampler, rng);
  Table out;
  if (task == Task::kGmm2d) {
    const MinMaxScaler scaler = ScalerFromJson(r.At("scaler"), "checkpoint.scaler");
    r.Finish();
    scaler.Inverse(gen.data);
    out.columns = {"x0", "x1", "label"};
    out.values.resize(n, 3);
    out.values.leftCols(2) = gen.data;
    for (Eigen::Index i = 0; i < n; ++i) out.values(i, 2) = gen.labels[static_cast<size_t>(i)];
    return out;
  }
  Require(task == Task::kTabular, "checkpoint task cannot generate samples");
  const TabularSchema schema = SchemaFromJson(r.At("schema"), "checkpoint.schema");
  r.Finish();
  return Decode(gen.data, gen.labels, schema);
}

struct TrainArtifacts {
  Json checkpoint;
  Json report;
  Table samples;
};

namespace internal {

inline Json MakeCheckpoint(const ExperimentConfig& cfg, const std::string& hash,
                           const TrainResult& result) {
  return Json{{"format", "dphp-checkpoint"},
              {"version", kCheckpointVersion},
              {"config_hash", hash},
              {"seed", cfg.seed},
              {"task", TaskName(cfg.task)},
              {"model", ToJson(result.model)},
              {"label_probs", result.sampler.probs}};
}

inline Json PrivacySummary(const ExperimentConfig& cfg, const RunReport& r) {
  const auto& b = cfg.train.budget;
  if (!cfg.train.is_private) return Json{{"private", false}};
  return Json{{"private", true},
              {"epsilon_total", b.epsilon_total},
              {"delta_total", b.delta_total},
              {"split_fraction", b.split_fraction},
              {"product_releases", r.product_releases},
              {"sigma_sum", r.sigma_sum},
              {"sigma_product_per_release", r.sigma_product_per_release},
              {"sigma_rff", r.sigma_rff},
              {"method", "analytic"}};
}

inline TrainArtifacts RunGmm(const ExperimentConfig& cfg, const std::string& hash) {
  const GmmSpec spec = cfg.gmm.spec();
  Rng data_rng = Substream(cfg.seed, "data");
  const LabeledData all = GmmSample(spec, cfg.gmm.n_total, data_rng);
  auto [train, test] = TrainTestSplit(all, cfg.gmm.test_fraction, data_rng);
  const MinMaxScaler scaler = GmmBounds(spec, cfg.gmm.margin);
  Matrix x = train.x;
  const int64_t clamped = scaler.Transform(x);

  const TrainResult result =
      Train(x, train.y, kGmmClasses, {OutputBlock{Decoder::kSigmoid, 2}}, cfg.train);

  TrainArtifacts out;
  out.checkpoint = MakeCheckpoint(cfg, hash, result);
  out.checkpoint["scaler"] = ToJson(scaler);
  const int64_t n = cfg.eval.num_generated > 0 ? cfg.eval.num_generated : x.rows();
  out.samples = GenerateFromCheckpoint(out.checkpoint, n, cfg.seed);

  const Matrix gx = out.samples.values.leftCols(2);
  std::vector<int> gy(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    gy[static_cast<size_t>(i)] = static_cast<int>(out.samples.values(i, 2));
  }
  const double radius = cfg.eval.coverage_radius;
  const int min_count = cfg.eval.coverage_min_count;
  Json metrics{{"real_test_nll", GmmNll(test.x, test.y, spec)},
               {"generated_nll", n > 0 ? Json(GmmNll(gx, gy, spec)) : Json(nullptr)},
               {"generated_count", n},
               {"test_count", test.x.rows()},
               {"mode_coverage", ModeCoverage(gx, gy, spec, radius, min_count)},
               {"real_mode_coverage", ModeCoverage(test.x, test.y, spec, radius, min_count)},
               {"coverage_radius", radius > 0.0 ? radius : 2.0 * spec.sigma},
               {"coverage_min_count", min_count},
               {"clamped_training_values", clamped}};
  out.report = Json{{"config_hash", hash},
                    {"seed", cfg.seed},
                    {"task", TaskName(cfg.task)},
                    {"privacy", PrivacySummary(cfg, result.report)},
                    {"metrics", std::move(metrics)},
                    {"training", ToJson(result.report)},
                    {"config", ToJson(cfg)}};
  return out;
}

inline TrainArtifacts RunTabular(const ExperimentConfig& cfg, const std::string& hash) {
  const TabularSchema& schema = *cfg.tabular.schema;
  Table real;
  if (cfg.tabular.planted) {
    Rng data_rng = Substream(cfg.seed, "data");
    real = PlantedTable(*cfg.tabular.planted, cfg.tabular.planted_rows, data_rng);
  } else {
    real = ReadCsv(cfg.tabular.csv);
  }
  const EncodedTable enc = Encode(real, schema);
  const TrainResult result = Train(enc.x, enc.labels, schema.num_classes(),
                                   OutputBlocks(schema), cfg.train);

  TrainArtifacts out;
  out.checkpoint = MakeCheckpoint(cfg, hash, result);
  out.checkpoint["schema"] = ToJson(schema);
  const int64_t n = cfg.eval.num_generated > 0 ? cfg.eval.num_generated : real.rows();
  out.samples = GenerateFromCheckpoint(out.checkpoint, n, cfg.seed);

  // Marginals compare the schema's columns in schema order.
  Table real_cols;
  real_cols.columns = out.samples.columns;
  real_cols.values.resize(real.rows(), static_cast<Eigen::Index>(real_cols.columns.size()));
  for (size_t k = 0; k < real_cols.columns.size(); ++k) {
    real_cols.values.col(static_cast<Eigen::Index>(k)) =
        real.values.col(real.ColumnIndex(real_cols.columns[k]));
  }
  Rng baseline_rng = Substream(cfg.seed, "baseline");
  const Table independent = IndependentMarginalsSample(real_cols, n, baseline_rng);
  Json marginals = Json::array();
  for (int alpha : cfg.eval.alphas) {
    if (n == 0) break;
    const AlphaWayResult synth =
        AlphaWayError(real_cols, out.samples, alpha, cfg.eval.max_subsets, cfg.seed);
    const AlphaWayResult base =
        AlphaWayError(real_cols, independent, alpha, cfg.eval.max_subsets, cfg.seed);
    marginals.push_back(Json{{"alpha", alpha},
                             {"mean_tv_error", synth.mean_error},
                             {"independent_baseline_tv_error", base.mean_error},
                             {"subsets", synth.num_subsets},
                             {"exhaustive", synth.exhaustive}});
  }
  Json metrics{{"generated_count", n},
               {"training_rows", real.rows()},
               {"clamped_training_values", enc.clamped},
               {"max_subsets", cfg.eval.max_subsets},
               {"marginals", std::move(marginals)}};
  out.report = Json{{"config_hash", hash},
                    {"seed", cfg.seed},
                    {"task", TaskName(cfg.task)},
                    {"privacy", PrivacySummary(cfg, result.report)},
                    {"metrics", std::move(metrics)},
                    {"training", ToJson(result.report)},
                    {"config", ToJson(cfg)}};
  return out;
}

}  // namespace internal

inline TrainArtifacts RunTrain(const ExperimentConfig& cfg) {
  const std::string hash = ConfigHash(ToJson(cfg));
  switch (cfg.task) {
    case Task::kGmm2d:
      return internal::RunGmm(cfg, hash);
    case Task::kTabular:
      return internal::RunTabular(cfg, hash);
    case Task::kFeaturesBench:
      break;
  }
  Fail(ErrorCode::kInvalidArgument, "task features_bench has no training run");
}

// ---------------------------------------------------------------------------
// Kernel-approximation benchmark.

struct BenchRow {
  int order_or_count = 0;
  double error = 0.0;
  double stddev = 0.0;
};

struct BenchResult {
  double length_scale = 0.0;
  std::vector<BenchRow> hp;
  std::vector<BenchRow> rf;
};

// Two 1-D samples of size n from N(0, 1) and N(mean_shift, 1). Reports the mean
// absolute Gaussian-kernel approximation error of HP features per order and of
// Fourier features per count, the latter averaged over frequency redraws.
inline BenchResult RunFeaturesBench(const BenchOptions& opt, uint64_t seed) {
  Require(opt.n >= 2, "benchmark needs at least two points per sample");
  Require(!opt.hp_orders.empty(), "HP order list is empty");
  Require(!opt.rf_counts.empty(), "Fourier count list is empty");
  Require(opt.redraws >= 1, "redraw count must be positive");
  Rng rng = Substream(seed, "data");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(opt.n, 1), y(opt.n, 1);
  for (Eigen::Index i = 0; i < opt.n; ++i) x(i, 0) = normal(rng);
  for (Eigen::Index i = 0; i < opt.n; ++i) y(i, 0) = opt.mean_shift + normal(rng);
  BenchResult out;
  if (opt.length_scale > 0.0) {
    out.length_scale = opt.length_scale;
  } else {
    Matrix both(2 * opt.n, 1);
    both << x, y;
    out.length_scale = MedianHeuristic(both, 100000, seed);
  }
  for (int order : opt.hp_orders) {
    const FeatureMapSpec spec = MakeSumSpec(1, order, out.length_scale);
    out.hp.push_back({order, ApproxError(x, y, spec, out.length_scale), 0.0});
  }
  Rng redraw = Substream(seed, "bench-redraws");
  for (int count : opt.rf_counts) {
    std::vector<double> errs;
    for (int r = 0; r < opt.redraws; ++r) {
      const FeatureMapSpec spec = MakeRffSpec(1, count, out.length_scale, redraw());
      errs.push_back(ApproxError(x, y, spec, out.length_scale));
    }
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= static_cast<double>(errs.size());
    double var = 0.0;
    for (double e : errs) var += (e - mean) * (e - mean);
    const double sd = errs.size() > 1 ? std::sqrt(var / static_cast<double>(errs.size() - 1)) : 0.0;
    out.rf.push_back({count, mean, sd});
  }
  return out;
}

inline void WriteBenchCsv(const std::string& path, const std::vector<BenchRow>& rows) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << "order_or_count,error,stddev\n";
  for (const auto& r : rows) {
    out << r.order_or_count << "," << FormatNumber(r.error) << "," << FormatNumber(r.stddev)
        << "\n";
  }
}

// ---------------------------------------------------------------------------
// Evaluation of sample files.

enum class EvalTask { kNll, kMarginals, kCoverage, kDownstream };

inline EvalTask ParseEvalTask(const std::string& name) {
  if (name == "nll") return EvalTask::kNll;
  if (name == "marginals") return EvalTask::kMarginals;
  if (name == "coverage") return EvalTask::kCoverage;
  if (name == "downstream") return EvalTask::kDownstream;
  Fail(ErrorCode::kInvalidArgument, "unknown eval task: " + name);
}

struct EvalRequest {
  EvalTask task = EvalTask::kNll;
  GmmTask gmm;
  int alpha = 3;
  int64_t max_subsets = 2000;
  uint64_t seed = 0;
  double coverage_radius = 0.0;
  int coverage_min_count = 3;
  std::string label_column = "label";
  std::optional<TabularSchema> schema;  // encodes downstream features when set
  int logreg_epochs = 500;
  double logreg_lr = 0.5;
};

namespace internal {

struct PointsWithLabels {
  Matrix x;
  std::vector<int> y;
};

inline PointsWithLabels GmmPoints(const Table& t, const std::string& what) {
  PointsWithLabels out;
  out.x.resize(t.rows(), 2);
  out.x.col(0) = t.values.col(t.ColumnIndex("x0"));
  out.x.col(1) = t.values.col(t.ColumnIndex("x1"));
  const Eigen::Index lc = t.ColumnIndex("label");
  out.y.resize(static_cast<size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double v = t.values(i, lc);
    Require(v == std::round(v) && v >= 0 && v < kGmmClasses,
            what + ": label out of range at row " + std::to_string(i));
    out.y[static_cast<size_t>(i)] = static_cast<int>(v);
  }
  return out;
}

// Features and integer labels for the downstream classifier.
inline PointsWithLabels ClassifierData(const Table& t, const EvalRequest& req,
                                       int* num_classes) {
  PointsWithLabels out;
  if (req.schema) {
    Require(req.schema->label.has_value(), "downstream eval needs a schema with a label");
    const EncodedTable enc = Encode(t, *req.schema);
    out.x = enc.x;
    out.y = enc.labels;
    *num_classes = req.schema->num_classes();
    return out;
  }
  const Eigen::Index lc = t.ColumnIndex(req.label_column);
  out.x.resize(t.rows(), t.values.cols() - 1);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
    if (j != lc) out.x.col(k++) = t.values.col(j);
  }
  out.y.resize(static_cast<size_t>(t.rows()));
  int max_label = 0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double v = t.values(i, lc);
    Require(v == std::round(v) && v >= 0, "labels must be non-negative integers");
    out.y[static_cast<size_t>(i)] = static_cast<int>(v);
    max_label = std::max(max_label, static_cast<int>(v));
  }
  *num_classes = std::max(*num_classes, max_label + 1);
  return out;
}

inline Table SameColumnsAs(const Table& reference, const Table& t) {
  Require(reference.columns.size() == t.columns.size(), "tables differ in column count");
  Table out;
  out.columns = reference.columns;
  out.values.resize(t.rows(), t.values.cols());
  for (size_t k = 0; k < reference.columns.size(); ++k) {
    out.values.col(static_cast<Eigen::Index>(k)) = t.values.col(t.ColumnIndex(reference.columns[k]));
  }
  return out;
}

}  // namespace internal

// Metric report comparing a synthetic table against a real one.
inline Json RunEval(const EvalRequest& req, const Table& real, const Table& synth) {
  Require(real.rows() > 0, "real table is empty");
  Require(synth.rows() > 0, "synthetic table is empty");
  switch (req.task) {
    case EvalTask::kNll: {
      const GmmSpec spec = req.gmm.spec();
      const auto r = internal::GmmPoints(real, "real");
      const auto s = internal::GmmPoints(synth, "synth");
      return Json{{"task", "nll"},
                  {"real_nll", GmmNll(r.x, r.y, spec)},
                  {"synth_nll", GmmNll(s.x, s.y, spec)},
                  {"real_rows", real.rows()},
                  {"synth_rows", synth.rows()},
                  {"gmm", Json{{"spacing", req.gmm.spacing},
                               {"origin", req.gmm.origin},
                               {"sigma", req.gmm.sigma}}}};
    }
    case EvalTask::kCoverage: {
      const GmmSpec spec = req.gmm.spec();
      const auto r = internal::GmmPoints(real, "real");
      const auto s = internal::GmmPoints(synth, "synth");
      const double radius = req.coverage_radius > 0.0 ? req.coverage_radius : 2.0 * spec.sigma;
      return Json{{"task", "coverage"},
                  {"real_coverage", ModeCoverage(r.x, r.y, spec, radius, req.coverage_min_count)},
                  {"synth_coverage", ModeCoverage(s.x, s.y, spec, radius, req.coverage_min_count)},
                  {"modes", kGmmClusters},
                  {"radius", radius},
                  {"min_count", req.coverage_min_count}};
    }
    case EvalTask::kMarginals: {
      const Table aligned = internal::SameColumnsAs(real, synth);
      const AlphaWayResult res =
          AlphaWayError(real, aligned, req.alpha, req.max_subsets, req.seed);
      return Json{{"task", "marginals"},
                  {"alpha", req.alpha},
                  {"mean_tv_error", res.mean_error},
                  {"subsets", res.num_subsets},
                  {"exhaustive", res.exhaustive},
                  {"max_subsets", req.max_subsets},
                  {"seed", req.seed}};
    }
    case EvalTask::kDownstream: {
      int num_classes = 2;
      const auto test = internal::ClassifierData(real, req, &num_classes);
      const auto train = internal::ClassifierData(synth, req, &num_classes);
      const ClassifierMetrics m =
          DownstreamLogreg(train.x, train.y, test.x, test.y, num_classes,
                           req.logreg_epochs, req.logreg_lr);
      return Json{{"task", "downstream"},
                  {"classifier", "logistic_regression"},
                  {"trained_on", "synth"},
                  {"tested_on", "real"},
                  {"accuracy", m.accuracy},
                  {"roc_auc", m.roc_auc ? Json(*m.roc_auc) : Json(nullptr)},
                  {"f1_macro", m.f1_macro},
                  {"num_classes", num_classes},
                  {"epochs", req.logreg_epochs},
                  {"learning_rate", req.logreg_lr}};
    }
  }
  Fail(ErrorCode::kInvalidArgument, "unknown eval task");
}

}  // namespace dphp

#endif  // DPHP_EXPERIMENT_HPP_
