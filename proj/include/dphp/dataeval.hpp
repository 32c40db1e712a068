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

// Ground-truth 2-D Gaussian mixture, tabular encoding and CSV handling, and
// the evaluation metrics: mixture NLL, mode coverage, alpha-way marginal
// total-variation error and a logistic-regression downstream check.

#ifndef DPHP_DATAEVAL_HPP_
#define DPHP_DATAEVAL_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dphp/error.hpp"
#include "dphp/generator.hpp"
#include "dphp/hermite.hpp"
#include "dphp/rng.hpp"

namespace dphp {

struct LabeledData {
  Matrix x;
  std::vector<int> y;
};

// ---------------------------------------------------------------------------
// Gaussian mixture ground truth.

inline constexpr int kGmmClusters = 25;
inline constexpr int kGmmClasses = 5;

struct GmmSpec {
  Matrix means;                   // 25 x 2
  std::vector<int> cluster_class; // class of each cluster
  double sigma = 0.2;             // isotropic standard deviation

  // 5 x 5 grid with the given spacing starting at `origin`. The cluster in
  // grid row r, column c belongs to class (c + 2r) mod 5, so every class owns
  // one cluster per row and per column.
  static GmmSpec Grid(double spacing = 1.0, double origin = 0.0,
                      double sigma = 0.2) {
    GmmSpec spec;
    spec.sigma = sigma;
    spec.means.resize(kGmmClusters, 2);
    spec.cluster_class.resize(kGmmClusters);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) {
        const int j = r * 5 + c;
        spec.means(j, 0) = origin + spacing * c;
        spec.means(j, 1) = origin + spacing * r;
        spec.cluster_class[static_cast<size_t>(j)] = (c + 2 * r) % 5;
      }
    }
    return spec;
  }

  void Validate() const {
    Require(means.rows() == kGmmClusters && means.cols() == 2,
            "mixture needs 25 two-dimensional means");
    Require(cluster_class.size() == static_cast<size_t>(kGmmClusters),
            "mixture needs a class for every cluster");
    Require(sigma > 0.0 && std::isfinite(sigma), "mixture sigma must be positive");
    std::vector<int> per_class(kGmmClasses, 0);
    for (int k : cluster_class) {
      Require(k >= 0 && k < kGmmClasses, "cluster class out of range");
      ++per_class[static_cast<size_t>(k)];
    }
    for (int count : per_class) {
      Require(count == kGmmClusters / kGmmClasses,
              "every class must own exactly five clusters");
    }
  }
};

// n_total / 25 points per cluster; the first n_total % 25 clusters get one
// extra. Rows are grouped by cluster.
inline LabeledData GmmSample(const GmmSpec& spec, int64_t n_total, Rng& rng) {
  spec.Validate();
  Require(n_total >= 0, "sample count must be non-negative");
  LabeledData out;
  out.x.resize(n_total, 2);
  out.y.resize(static_cast<size_t>(n_total));
  std::normal_distribution<double> normal(0.0, spec.sigma);
  int64_t row = 0;
  for (int j = 0; j < kGmmClusters; ++j) {
    const int64_t count = n_total / kGmmClusters + (j < n_total % kGmmClusters ? 1 : 0);
    for (int64_t i = 0; i < count; ++i, ++row) {
      out.x(row, 0) = spec.means(j, 0) + normal(rng);
      out.x(row, 1) = spec.means(j, 1) + normal(rng);
      out.y[static_cast<size_t>(row)] = spec.cluster_class[static_cast<size_t>(j)];
    }
  }
  return out;
}

// Shuffles and returns (train, test) with round(test_fraction * n) test rows.
inline std::pair<LabeledData, LabeledData> TrainTestSplit(const LabeledData& data,
                                                          double test_fraction,
                                                          Rng& rng) {
  Require(test_fraction >= 0.0 && test_fraction <= 1.0,
          "test fraction must lie in [0, 1]");
  const int64_t n = data.x.rows();
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const int64_t n_test = std::llround(test_fraction * static_cast<double>(n));
  auto take = [&](int64_t begin, int64_t end) {
    LabeledData part;
    part.x.resize(end - begin, data.x.cols());
    for (int64_t i = begin; i < end; ++i) {
      const int64_t src = order[static_cast<size_t>(i)];
      part.x.row(i - begin) = data.x.row(src);
      part.y.push_back(data.y[static_cast<size_t>(src)]);
    }
    return part;
  };
  return {take(n_test, n), take(0, n_test)};
}

// Per-sample -log sum_{j in C_y} (1/25) N(x | mu_j, sigma^2 I), averaged.
inline double GmmNll(const Matrix& x, std::span<const int> labels,
                     const GmmSpec& spec) {
  spec.Validate();
  Require(x.cols() == 2, "mixture samples must be two-dimensional");
  Require(static_cast<Eigen::Index>(labels.size()) == x.rows(),
          "label count does not match sample count");
  Require(x.rows() > 0, "NLL of an empty sample");
  const double var = spec.sigma * spec.sigma;
  const double log_norm = std::log(1.0 / kGmmClusters) -
                          std::log(2.0 * std::numbers::pi * var);
  double total = 0.0;
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int y = labels[static_cast<size_t>(i)];
    Require(y >= 0 && y < kGmmClasses, "label out of range");
    terms.clear();
    for (int j = 0; j < kGmmClusters; ++j) {
      if (spec.cluster_class[static_cast<size_t>(j)] != y) continue;
      const double d2 = (x.row(i) - spec.means.row(j)).squaredNorm();
      terms.push_back(log_norm - d2 / (2.0 * var));
    }
    const double mx = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    total += -(mx + std::log(s));
  }
  return total / static_cast<double>(x.rows());
}

// A mode counts as covered when at least `min_count` samples carrying the
// mode's class fall within `radius` of its mean. radius <= 0 means 2 sigma.
inline int ModeCoverage(const Matrix& x, std::span<const int> labels,
                        const GmmSpec& spec, double radius = 0.0,
                        int min_count = 3) {
  spec.Validate();
  if (radius <= 0.0) radius = 2.0 * spec.sigma;
  std::vector<int> hits(kGmmClusters, 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < kGmmClusters; ++j) {
      if (spec.cluster_class[static_cast<size_t>(j)] != labels[static_cast<size_t>(i)]) {
        continue;
      }
      if ((x.row(i) - spec.means.row(j)).norm() <= radius) ++hits[static_cast<size_t>(j)];
    }
  }
  return static_cast<int>(
      std::count_if(hits.begin(), hits.end(), [&](int h) { return h >= min_count; }));
}

// ---------------------------------------------------------------------------
// Min-max normalization to [0, 1].

struct MinMaxScaler {
  Vector lo, hi;

  static MinMaxScaler Fit(const Matrix& x) {
    Require(x.rows() > 0, "cannot fit a scaler on empty data");
    MinMaxScaler s{x.colwise().minCoeff().transpose(),
                   x.colwise().maxCoeff().transpose()};
    for (Eigen::Index d = 0; d < s.lo.size(); ++d) {
      if (s.hi[d] <= s.lo[d]) s.hi[d] = s.lo[d] + 1.0;
    }
    return s;
  }

  // Values outside [lo, hi] are clamped; returns the number clamped.
  int64_t Transform(Matrix& x) const {
    Require(x.cols() == lo.size(), "scaler dimension mismatch");
    int64_t clamped = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index d = 0; d < x.cols(); ++d) {
        double v = (x(i, d) - lo[d]) / (hi[d] - lo[d]);
        if (v < 0.0 || v > 1.0) {
          ++clamped;
          v = std::clamp(v, 0.0, 1.0);
        }
        x(i, d) = v;
      }
    }
    return clamped;
  }

  void Inverse(Matrix& x) const {
    Require(x.cols() == lo.size(), "scaler dimension mismatch");
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      x.col(d) = (x.col(d).array() * (hi[d] - lo[d]) + lo[d]).matrix();
    }
  }
};

// Bounds known without looking at samples: mean extent +/- margin.
inline MinMaxScaler GmmBounds(const GmmSpec& spec, double margin) {
  return MinMaxScaler{
      (spec.means.colwise().minCoeff().array() - margin).matrix().transpose(),
      (spec.means.colwise().maxCoeff().array() + margin).matrix().transpose()};
}

// ---------------------------------------------------------------------------
// Tables, schemas and CSV.

struct Table {
  std::vector<std::string> columns;
  Matrix values;  // rows x columns; categorical entries hold integer codes

  Eigen::Index rows() const { return values.rows(); }

  int ColumnIndex(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return static_cast<int>(i);
    }
    Fail(ErrorCode::kInvalidArgument, "table has no column '" + name + "'");
  }
};

enum class ColumnKind { kNumeric, kCategorical, kOrdinal };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  double min = 0.0;
  double max = 1.0;
  int cardinality = 0;
  double precision = 0.0;  // decoded numerics are rounded to this step if > 0

  bool discrete() const { return kind != ColumnKind::kNumeric; }
  int width() const { return discrete() ? cardinality : 1; }
};

struct TabularSchema {
  std::vector<ColumnSpec> columns;
  std::optional<std::string> label;

  const ColumnSpec& column(const std::string& name) const {
    for (const auto& c : columns) {
      if (c.name == name) return c;
    }
    Fail(ErrorCode::kInvalidArgument, "schema has no column '" + name + "'");
  }

  int num_classes() const { return label ? column(*label).cardinality : 1; }

  std::vector<const ColumnSpec*> features() const {
    std::vector<const ColumnSpec*> out;
    for (const auto& c : columns) {
      if (!label || c.name != *label) out.push_back(&c);
    }
    return out;
  }

  int encoded_width() const {
    int w = 0;
    for (const ColumnSpec* c : features()) w += c->width();
    return w;
  }

  void Validate() const {
    Require(!columns.empty(), "schema has no columns");
    std::set<std::string> names;
    for (const auto& c : columns) {
      Require(names.insert(c.name).second, "duplicate schema column " + c.name);
      if (c.discrete()) {
        Require(c.cardinality >= 2, "column " + c.name + " needs cardinality >= 2");
      } else {
        Require(std::isfinite(c.min) && std::isfinite(c.max) && c.max > c.min,
                "column " + c.name + " needs finite bounds with max > min");
        Require(c.precision >= 0.0, "precision must be non-negative");
      }
    }
    if (label) {
      Require(column(*label).discrete(), "label column must be categorical");
    }
    Require(!features().empty(), "schema has no feature columns");
  }
};

inline std::vector<OutputBlock> OutputBlocks(const TabularSchema& schema) {
  std::vector<OutputBlock> blocks;
  for (const ColumnSpec* c : schema.features()) {
    blocks.push_back(c->discrete() ? OutputBlock{Decoder::kSoftmax, c->cardinality}
                                   : OutputBlock{Decoder::kSigmoid, 1});
  }
  return blocks;
}

struct EncodedTable {
  Matrix x;  // n x encoded_width, entries in [0, 1]
  std::vector<int> labels;
  int64_t clamped = 0;
};

namespace internal {

inline int CategoryCode(double v, const ColumnSpec& c) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < 0 || r >= c.cardinality) {
    Fail(ErrorCode::kInvalidArgument,
         "value " + std::to_string(v) + " is not a category of column " + c.name);
  }
  return static_cast<int>(r);
}

}  // namespace internal

// Numerics map to (v - min) / (max - min), clamped to [0, 1]; discrete
// columns become one-hot blocks.
inline EncodedTable Encode(const Table& table, const TabularSchema& schema) {
  schema.Validate();
  EncodedTable out;
  const auto feats = schema.features();
  out.x = Matrix::Zero(table.rows(), schema.encoded_width());
  std::vector<int> src;
  for (const ColumnSpec* c : feats) src.push_back(table.ColumnIndex(c->name));
  const int label_col = schema.label ? table.ColumnIndex(*schema.label) : -1;
  out.labels.assign(static_cast<size_t>(table.rows()), 0);
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    int at = 0;
    for (size_t f = 0; f < feats.size(); ++f) {
      const ColumnSpec& c = *feats[f];
      const double v = table.values(i, src[f]);
      if (c.discrete()) {
        out.x(i, at + internal::CategoryCode(v, c)) = 1.0;
      } else {
        Require(std::isfinite(v), "non-finite value in column " + c.name);
        double u = (v - c.min) / (c.max - c.min);
        if (u < 0.0 || u > 1.0) {
          ++out.clamped;
          u = std::clamp(u, 0.0, 1.0);
        }
        out.x(i, at) = u;
      }
      at += c.width();
    }
    if (label_col >= 0) {
      out.labels[static_cast<size_t>(i)] =
          internal::CategoryCode(table.values(i, label_col), schema.column(*schema.label));
    }
  }
  return out;
}

// Inverse of Encode. Discrete blocks decode to their argmax.
inline Table Decode(const Matrix& x, std::span<const int> labels,
                    const TabularSchema& schema) {
  schema.Validate();
  Require(x.cols() == schema.encoded_width(), "encoded width mismatch");
  Table t;
  for (const auto& c : schema.columns) t.columns.push_back(c.name);
  t.values.resize(x.rows(), static_cast<Eigen::Index>(schema.columns.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int at = 0;
    for (size_t k = 0; k < schema.columns.size(); ++k) {
      const ColumnSpec& c = schema.columns[k];
      const auto col = static_cast<Eigen::Index>(k);
      if (schema.label && c.name == *schema.label) {
        Require(static_cast<Eigen::Index>(labels.size()) == x.rows(),
                "labels required to decode a labeled schema");
        t.values(i, col) = labels[static_cast<size_t>(i)];
        continue;
      }
      if (c.discrete()) {
        Eigen::Index best = 0;
        x.row(i).segment(at, c.cardinality).maxCoeff(&best);
        t.values(i, col) = static_cast<double>(best);
      } else {
        double v = c.min + std::clamp(x(i, at), 0.0, 1.0) * (c.max - c.min);
        if (c.precision > 0.0) v = std::round(v / c.precision) * c.precision;
        t.values(i, col) = v;
      }
      at += c.width();
    }
  }
  return t;
}

namespace internal {

inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace internal

inline Table ParseCsv(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) {
    Fail(ErrorCode::kInvalidArgument, "CSV input has no header row");
  }
  t.columns = internal::SplitCsvLine(line);
  std::vector<std::vector<double>> rows;
  int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = internal::SplitCsvLine(line);
    if (cells.size() != t.columns.size()) {
      Fail(ErrorCode::kInvalidArgument,
           "CSV line " + std::to_string(line_no) + " has " +
               std::to_string(cells.size()) + " fields, expected " +
               std::to_string(t.columns.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        Fail(ErrorCode::kInvalidArgument, "CSV line " + std::to_string(line_no) +
                                              ": '" + c + "' is not a number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(t.columns.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return t;
}

inline Table ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kInvalidArgument, "cannot open " + path);
  return ParseCsv(in);
}

inline std::string FormatNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline void PrintCsv(std::ostream& out, const Table& t) {
  for (size_t j = 0; j < t.columns.size(); ++j) {
    out << (j ? "," : "") << t.columns[j];
  }
  out << "\n";
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
      out << (j ? "," : "") << FormatNumber(t.values(i, j));
    }
    out << "\n";
  }
}

inline void WriteCsv(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kInvalidArgument, "cannot write " + path);
  PrintCsv(out, t);
}

// ---------------------------------------------------------------------------
// Alpha-way marginals.

struct AlphaWayResult {
  double mean_error = 0.0;
  int64_t num_subsets = 0;
  bool exhaustive = true;
};

// Half the L1 distance between the normalized contingency tables of `real`
// and `synth` restricted to `cols`.
inline double MarginalTv(const Matrix& real, const Matrix& synth,
                         const std::vector<int>& cols) {
  std::map<std::vector<int64_t>, std::pair<double, double>> cells;
  std::vector<int64_t> key(cols.size());
  auto count = [&](const Matrix& m, bool first) {
    const double w = 1.0 / static_cast<double>(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (size_t k = 0; k < cols.size(); ++k) key[k] = std::llround(m(i, cols[k]));
      auto& cell = cells[key];
      (first ? cell.first : cell.second) += w;
    }
  };
  count(real, true);
  count(synth, false);
  double l1 = 0.0;
  for (const auto& [k, pq] : cells) l1 += std::abs(pq.first - pq.second);
  return 0.5 * l1;
}

inline double Binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Mean TV error over all alpha-column subsets, or over `max_subsets` subsets
// drawn uniformly with `seed` when there are more than that.
inline AlphaWayResult AlphaWayError(const Table& real, const Table& synth, int alpha,
                                    int64_t max_subsets = 2000, uint64_t seed = 0) {
  const int cols = static_cast<int>(real.values.cols());
  Require(synth.values.cols() == cols, "tables differ in column count");
  Require(alpha >= 1, "alpha must be positive");
  Require(alpha <= cols, "alpha " + std::to_string(alpha) + " exceeds the " +
                             std::to_string(cols) + " available columns");
  Require(real.rows() > 0 && synth.rows() > 0, "marginals of an empty table");
  AlphaWayResult result;
  std::vector<std::vector<int>> subsets;
  const double total = Binomial(cols, alpha);
  if (total <= static_cast<double>(max_subsets)) {
    std::vector<int> pick(static_cast<size_t>(alpha));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      subsets.push_back(pick);
      int i = alpha - 1;
      while (i >= 0 && pick[static_cast<size_t>(i)] == cols - alpha + i) --i;
      if (i < 0) break;
      ++pick[static_cast<size_t>(i)];
      for (int j = i + 1; j < alpha; ++j) {
        pick[static_cast<size_t>(j)] = pick[static_cast<size_t>(j - 1)] + 1;
      }
    }
  } else {
    result.exhaustive = false;
    Rng rng = Substream(seed, "alpha-subsets");
    std::set<std::vector<int>> seen;
    while (static_cast<int64_t>(subsets.size()) < max_subsets) {
      std::vector<int> s = SubsampleDims(cols, alpha, rng);
      if (seen.insert(s).second) subsets.push_back(std::move(s));
    }
  }
  double sum = 0.0;
  for (const auto& s : subsets) sum += MarginalTv(real.values, synth.values, s);
  result.num_subsets = static_cast<int64_t>(subsets.size());
  result.mean_error = sum / static_cast<double>(subsets.size());
  return result;
}

// Samples each column independently from its empirical 1-way marginal.
inline Table IndependentMarginalsSample(const Table& real, int64_t n, Rng& rng) {
  Require(real.rows() > 0, "cannot sample marginals of an empty table");
  Table out;
  out.columns = real.columns;
  out.values.resize(n, real.values.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, real.rows() - 1);
  for (Eigen::Index j = 0; j < real.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) out.values(i, j) = real.values(pick(rng), j);
  }
  return out;
}

// Categorical table with planted dependencies: column j copies column
// parents[j] with probability copy_prob and is uniform otherwise. Parents must
// precede their children; -1 marks a root.
struct PlantedTableSpec {
  int cardinality = 4;
  std::vector<int> parents{-1, 0, 1, -1, 3, 0};
  double copy_prob = 0.7;

  void Validate() const {
    Require(cardinality >= 2, "cardinality must be at least 2");
    Require(!parents.empty(), "planted table needs at least one column");
    Require(copy_prob >= 0.0 && copy_prob <= 1.0, "copy probability must lie in [0, 1]");
    for (size_t j = 0; j < parents.size(); ++j) {
      Require(parents[j] >= -1 && parents[j] < static_cast<int>(j),
              "parents must precede their children");
    }
  }

  TabularSchema Schema() const {
    TabularSchema schema;
    for (size_t j = 0; j < parents.size(); ++j) {
      ColumnSpec c;
      c.name = "c" + std::to_string(j);
      c.kind = ColumnKind::kCategorical;
      c.cardinality = cardinality;
      schema.columns.push_back(c);
    }
    return schema;
  }
};

inline Table PlantedTable(const PlantedTableSpec& spec, int64_t n, Rng& rng) {
  spec.Validate();
  Require(n >= 0, "row count must be non-negative");
  Table t;
  const auto cols = static_cast<Eigen::Index>(spec.parents.size());
  for (Eigen::Index j = 0; j < cols; ++j) t.columns.push_back("c" + std::to_string(j));
  t.values.resize(n, cols);
  std::uniform_int_distribution<int> uniform(0, spec.cardinality - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = uniform(rng);
      const int parent = spec.parents[static_cast<size_t>(j)];
      if (parent >= 0 && coin(rng) < spec.copy_prob) v = t.values(i, parent);
      t.values(i, j) = v;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Downstream classifier.

struct ClassifierMetrics {
  double accuracy = 0.0;
  std::optional<double> roc_auc;  // binary tasks only
  double f1_macro = 0.0;
};

// AUC via the Mann-Whitney rank statistic with average ranks for ties.
inline double RocAuc(std::span<const double> scores, std::span<const int> truth) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (size_t i = 0; i < n;) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (truth[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

inline double F1Macro(std::span<const int> truth, std::span<const int> pred,
                      int num_classes) {
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < num_classes; ++k) {
    double tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == k && pred[i] == k;
      fp += truth[i] != k && pred[i] == k;
      fn += truth[i] == k && pred[i] != k;
    }
    if (tp + fp + fn == 0) continue;
    sum += 2.0 * tp / (2.0 * tp + fp + fn);
    ++used;
  }
  return used ? sum / used : 0.0;
}

struct LogisticModel {
  Matrix weights;  // (features + 1) x classes, last row is the bias

  Matrix Probabilities(const Matrix& x) const {
    Matrix logits = x * weights.topRows(x.cols());
    logits.rowwise() += weights.row(weights.rows() - 1);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double mx = logits.row(i).maxCoeff();
      logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
      logits.row(i) /= logits.row(i).sum();
    }
    return logits;
  }
};

// Full-batch gradient descent on the multinomial cross entropy, zero init.
inline LogisticModel FitLogistic(const Matrix& x, std::span<const int> y,
                                 int num_classes, int epochs, double lr) {
  Require(x.rows() > 0, "cannot fit on empty data");
  Require(static_cast<Eigen::Index>(y.size()) == x.rows(), "label count mismatch");
  LogisticModel model{Matrix::Zero(x.cols() + 1, num_classes)};
  Matrix onehot = Matrix::Zero(x.rows(), num_classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int k = y[static_cast<size_t>(i)];
    Require(k >= 0 && k < num_classes, "label out of range");
    onehot(i, k) = 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (int e = 0; e < epochs; ++e) {
    const Matrix residual = model.Probabilities(x) - onehot;
    model.weights.topRows(x.cols()) -= lr * inv_n * (x.transpose() * residual);
    model.weights.row(x.cols()) -= lr * inv_n * residual.colwise().sum();
  }
  return model;
}

inline ClassifierMetrics EvaluateClassifier(const Matrix& probs,
                                            std::span<const int> truth,
                                            int num_classes) {
  ClassifierMetrics m;
  std::vector<int> pred(static_cast<size_t>(probs.rows()));
  double correct = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    pred[static_cast<size_t>(i)] = static_cast<int>(best);
    correct += best == truth[static_cast<size_t>(i)];
  }
  m.accuracy = correct / static_cast<double>(probs.rows());
  m.f1_macro = F1Macro(truth, pred, num_classes);
  if (num_classes == 2) {
    std::vector<double> scores(static_cast<size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) scores[static_cast<size_t>(i)] = probs(i, 1);
    const double auc = RocAuc(scores, truth);
    if (!std::isnan(auc)) m.roc_auc = auc;
  }
  return m;
}

inline ClassifierMetrics DownstreamLogreg(const Matrix& train_x,
                                          std::span<const int> train_y,
                                          const Matrix& test_x,
                                          std::span<const int> test_y,
                                          int num_classes, int epochs = 500,
                                          double lr = 0.5) {
  Require(train_x.cols() == test_x.cols(), "train and test widths differ");
  Require(test_x.rows() > 0, "empty test set");
  Require(static_cast<Eigen::Index>(test_y.size()) == test_x.rows(),
          "label count mismatch");
  const LogisticModel model = FitLogistic(train_x, train_y, num_classes, epochs, lr);
  return EvaluateClassifier(model.Probabilities(test_x), test_y, num_classes);
}

}  // namespace dphp

#endif  // DPHP_DATAEVAL_HPP_
