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

// Labeled mean embeddings mu = (1/m) sum_i h(x_i) f(y_i)^T and the MMD
// quantities built on them.

#ifndef DPHP_EMBEDDING_HPP_
#define DPHP_EMBEDDING_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dphp/error.hpp"
#include "dphp/featuremaps.hpp"

namespace dphp {

enum class PartTag { kSum, kProduct, kRff, kCombinedSum, kCombinedProduct };

inline const char* PartTagName(PartTag tag) {
  switch (tag) {
    case PartTag::kSum:
      return "sum";
    case PartTag::kProduct:
      return "product";
    case PartTag::kRff:
      return "rff";
    case PartTag::kCombinedSum:
      return "combined-sum-block";
    case PartTag::kCombinedProduct:
      return "combined-product-block";
  }
  return "unknown";
}

inline PartTag PartTagFromName(const std::string& name) {
  for (PartTag t : {PartTag::kSum, PartTag::kProduct, PartTag::kRff,
                    PartTag::kCombinedSum, PartTag::kCombinedProduct}) {
    if (name == PartTagName(t)) return t;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown embedding part tag: " + name);
}

struct LabeledMeanEmbedding {
  Matrix matrix;  // feature_len x num_classes
  int64_t sample_count = 0;
  PartTag part = PartTag::kSum;
  uint64_t fingerprint = 0;
  bool privatized = false;
  double noise_sigma = 0.0;        // multiplier sigma
  double noise_sensitivity = 0.0;  // Delta the noise was scaled by

  int64_t feature_length() const { return matrix.rows(); }
  int num_classes() const { return static_cast<int>(matrix.cols()); }
};

inline Vector OneHot(int label, int num_classes) {
  Require(num_classes >= 1, "class count must be positive");
  Require(label >= 0 && label < num_classes,
          "label " + std::to_string(label) + " outside [0, " +
              std::to_string(num_classes) + ")");
  Vector v = Vector::Zero(num_classes);
  v[label] = 1.0;
  return v;
}

namespace internal {

inline void CheckLabels(std::span<const int> labels, Eigen::Index rows,
                        int num_classes) {
  Require(rows > 0, "mean embedding of an empty dataset");
  Require(static_cast<Eigen::Index>(labels.size()) == rows,
          "label count does not match sample count");
  Require(num_classes >= 1, "class count must be positive");
  for (int y : labels) {
    Require(y >= 0 && y < num_classes, "label out of range");
  }
}

// Streams rows through `feature_fn` and accumulates into columns by label,
// dividing by the total count at the end.
template <class FeatureFn>
Matrix AccumulateByLabel(const Matrix& data, std::span<const int> labels,
                         int num_classes, int64_t feature_len,
                         FeatureFn&& feature_fn) {
  Matrix acc = Matrix::Zero(feature_len, num_classes);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    acc.col(labels[static_cast<size_t>(i)]) +=
        feature_fn(data.row(i).transpose());
  }
  acc /= static_cast<double>(data.rows());
  return acc;
}

inline LabeledMeanEmbedding MakeEmbedding(Matrix matrix, int64_t m,
                                          PartTag part, uint64_t fingerprint) {
  LabeledMeanEmbedding e;
  e.matrix = std::move(matrix);
  e.sample_count = m;
  e.part = part;
  e.fingerprint = fingerprint;
  return e;
}

}  // namespace internal

// Embedding parts of `data` under `spec`. Combined maps produce two parts,
// product block first, then sum block; every other map produces one.
inline std::vector<LabeledMeanEmbedding> MeanEmbeddingParts(
    const Matrix& data, std::span<const int> labels, const FeatureMapSpec& spec,
    int num_classes) {
  internal::CheckLabels(labels, data.rows(), num_classes);
  Validate(spec);
  Require(data.cols() == InputDim(spec),
          "data dimension does not match feature map");
  const int64_t m = data.rows();
  std::vector<LabeledMeanEmbedding> parts;
  auto add = [&](const auto& part_spec, PartTag tag, auto fn) {
    parts.push_back(internal::MakeEmbedding(
        internal::AccumulateByLabel(data, labels, num_classes,
                                    FeatureLength(part_spec), fn),
        m, tag, Fingerprint(FeatureMapSpec(part_spec))));
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SumMapSpec>) {
          add(s, PartTag::kSum, [&](const Vector& x) { return SumMap(x, s); });
        } else if constexpr (std::is_same_v<T, ProductMapSpec>) {
          add(s, PartTag::kProduct,
              [&](const Vector& x) { return ProductMap(x, s); });
        } else if constexpr (std::is_same_v<T, RffMapSpec>) {
          add(s, PartTag::kRff, [&](const Vector& x) { return RffMap(x, s); });
        } else {
          add(s.product, PartTag::kCombinedProduct,
              [&](const Vector& x) { return ProductMap(x, s.product); });
          add(s.sum, PartTag::kCombinedSum,
              [&](const Vector& x) { return SumMap(x, s.sum); });
        }
      },
      spec);
  return parts;
}

inline LabeledMeanEmbedding MeanEmbedding(const Matrix& data,
                                          std::span<const int> labels,
                                          const FeatureMapSpec& spec,
                                          int num_classes) {
  Require(!std::holds_alternative<CombinedMapSpec>(spec),
          "combined maps have two parts; use MeanEmbeddingParts");
  return std::move(MeanEmbeddingParts(data, labels, spec, num_classes).front());
}

inline void CheckCompatible(const LabeledMeanEmbedding& a,
                            const LabeledMeanEmbedding& b) {
  if (a.fingerprint != b.fingerprint) {
    Fail(ErrorCode::kIncompatible,
         "embeddings were computed under different feature maps");
  }
  if (a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols()) {
    Fail(ErrorCode::kIncompatible, "embedding shapes differ");
  }
}

// Squared Frobenius distance ||mu_P - mu_Q||^2.
inline double MmdSqFeatures(const LabeledMeanEmbedding& p,
                            const LabeledMeanEmbedding& q) {
  CheckCompatible(p, q);
  return (p.matrix - q.matrix).squaredNorm();
}

// Biased quadratic-time estimator with the diagonal included:
// (1/m^2) sum k(a_i, a_j) + (1/n^2) sum k(b_i, b_j) - (2/mn) sum k(a_i, b_j).
template <class Sample, class Kernel>
double MmdSqFull(std::span<const Sample> a, std::span<const Sample> b,
                 Kernel&& kernel) {
  Require(!a.empty() && !b.empty(), "MMD needs two non-empty sample sets");
  auto mean_kernel = [&](std::span<const Sample> u, std::span<const Sample> v) {
    double total = 0.0;
    for (const auto& s : u) {
      for (const auto& t : v) total += kernel(s, t);
    }
    return total / (static_cast<double>(u.size()) * static_cast<double>(v.size()));
  };
  return mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b);
}

enum class GammaTarget { kProduct, kSum };

// gamma * ||product diff||^2 + ||sum diff||^2, or with gamma on the sum term
// when target is kSum.
inline double AugmentedLoss(double product_distance, double sum_distance,
                            double gamma, GammaTarget target = GammaTarget::kProduct) {
  Require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
  return target == GammaTarget::kProduct
             ? gamma * product_distance + sum_distance
             : product_distance + gamma * sum_distance;
}

inline double AugmentedLoss(const LabeledMeanEmbedding& real_product,
                            const LabeledMeanEmbedding& real_sum,
                            const LabeledMeanEmbedding& gen_product,
                            const LabeledMeanEmbedding& gen_sum, double gamma,
                            GammaTarget target = GammaTarget::kProduct) {
  Require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
  return AugmentedLoss(MmdSqFeatures(real_product, gen_product),
                       MmdSqFeatures(real_sum, gen_sum), gamma, target);
}

}  // namespace dphp

#endif  // DPHP_EMBEDDING_HPP_
