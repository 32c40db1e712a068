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

// Mehler eigen-decomposition of the one-dimensional Gaussian kernel
//
//   exp(-rho / (1 - rho^2) * (x - y)^2) = sum_c lambda_c f_c(x) f_c(y),
//
// with lambda_c = (1 - rho) rho^c. Features are the scaled eigenfunctions
// phi_c = sqrt(lambda_c) f_c, evaluated by a three-term recursion that never
// forms a raw Hermite polynomial.

#ifndef DPHP_HERMITE_HPP_
#define DPHP_HERMITE_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dphp/error.hpp"
#include "dphp/rng.hpp"

namespace dphp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kMinRho = 1e-6;
inline constexpr double kMaxRho = 1.0 - 1e-6;

struct HermiteBasis {
  double rho = 0.5;
  int order = 0;  // C; features have length C + 1.

  HermiteBasis() = default;
  HermiteBasis(double rho_in, int order_in) : rho(rho_in), order(order_in) {
    Validate();
  }

  int size() const { return order + 1; }

  void Validate() const {
    Require(std::isfinite(rho) && rho > 0.0 && rho < 1.0,
            "rho must lie in the open interval (0, 1), got " +
                std::to_string(rho));
    Require(order >= 0, "Hermite order must be non-negative");
  }

  bool operator==(const HermiteBasis&) const = default;
};

// Solves rho / (1 - rho^2) = 1 / (2 l^2) for rho in (0, 1).
inline double RhoFromLengthScale(double length_scale) {
  Require(std::isfinite(length_scale) && length_scale > 0.0,
          "length scale must be positive and finite");
  const double a = 1.0 / (2.0 * length_scale * length_scale);
  // (-1 + sqrt(1 + 4a^2)) / (2a), rewritten to avoid cancellation at small a.
  return 2.0 * a / (1.0 + std::sqrt(1.0 + 4.0 * a * a));
}

inline double LengthScaleFromRho(double rho) {
  Require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  return std::sqrt((1.0 - rho * rho) / (2.0 * rho));
}

// Clamps rho into [kMinRho, kMaxRho]. Returns true when clamping happened so
// callers can warn.
inline bool ClampRho(double& rho) {
  const double clamped = std::clamp(rho, kMinRho, kMaxRho);
  const bool changed = clamped != rho;
  rho = clamped;
  return changed;
}

inline double Eigenvalue(int c, double rho) {
  Require(c >= 0, "eigenvalue index must be non-negative");
  Require(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
  return (1.0 - rho) * std::pow(rho, c);
}

namespace internal {

inline void CheckInput(double x) {
  Require(std::isfinite(x), "Hermite feature input must be finite");
}

}  // namespace internal

// Writes phi_0(x) .. phi_C(x) into `out` (length C + 1).
inline void HpFeaturesInto(double x, const HermiteBasis& basis,
                           Eigen::Ref<Vector> out) {
  internal::CheckInput(x);
  const double rho = basis.rho;
  const int order = basis.order;
  const double scale = std::pow((1.0 + rho) * (1.0 - rho), 0.25);
  const double envelope = std::exp(-rho * x * x / (1.0 + rho));
  out[0] = scale * envelope;
  if (order == 0) return;
  out[1] = scale * std::sqrt(rho / 2.0) * 2.0 * x * envelope;
  for (int k = 1; k < order; ++k) {
    const double kd = static_cast<double>(k);
    out[k + 1] = std::sqrt(rho / (2.0 * (kd + 1.0))) * 2.0 * x * out[k] -
                 rho / std::sqrt(kd * (kd + 1.0)) * kd * out[k - 1];
  }
}

inline Vector HpFeatures(double x, const HermiteBasis& basis) {
  Vector out(basis.size());
  HpFeaturesInto(x, basis, out);
  return out;
}

// Features and their derivatives with respect to x, from the differentiated
// recursion.
inline void HpFeaturesWithGradInto(double x, const HermiteBasis& basis,
                                   Eigen::Ref<Vector> value,
                                   Eigen::Ref<Vector> grad) {
  HpFeaturesInto(x, basis, value);
  const double rho = basis.rho;
  const int order = basis.order;
  grad[0] = -(2.0 * rho * x / (1.0 + rho)) * value[0];
  if (order == 0) return;
  const double a0 = std::sqrt(rho / 2.0);
  grad[1] = a0 * (2.0 * value[0] + 2.0 * x * grad[0]);
  for (int k = 1; k < order; ++k) {
    const double kd = static_cast<double>(k);
    const double a = std::sqrt(rho / (2.0 * (kd + 1.0)));
    const double b = rho / std::sqrt(kd * (kd + 1.0)) * kd;
    grad[k + 1] = a * (2.0 * value[k] + 2.0 * x * grad[k]) - b * grad[k - 1];
  }
}

inline std::pair<Vector, Vector> HpFeaturesWithGrad(double x,
                                                    const HermiteBasis& basis) {
  Vector value(basis.size());
  Vector grad(basis.size());
  HpFeaturesWithGradInto(x, basis, value, grad);
  return {std::move(value), std::move(grad)};
}

// Median of pairwise Euclidean distances between the rows of `data`. When
// n(n-1)/2 exceeds `max_pairs`, `max_pairs` distinct-index pairs are drawn
// uniformly with `seed`.
inline double MedianHeuristic(const Matrix& data, int64_t max_pairs = 100000,
                              uint64_t seed = 0) {
  const int64_t n = data.rows();
  Require(n >= 2, "median heuristic needs at least two samples");
  Require(max_pairs >= 1, "max_pairs must be positive");
  const int64_t total = n * (n - 1) / 2;
  std::vector<double> dists;
  if (total <= max_pairs) {
    dists.reserve(static_cast<size_t>(total));
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = i + 1; j < n; ++j) {
        dists.push_back((data.row(i) - data.row(j)).norm());
      }
    }
  } else {
    Rng rng = Substream(seed, "median-heuristic");
    std::uniform_int_distribution<int64_t> pick(0, n - 1);
    dists.reserve(static_cast<size_t>(max_pairs));
    while (static_cast<int64_t>(dists.size()) < max_pairs) {
      const int64_t i = pick(rng);
      const int64_t j = pick(rng);
      if (i == j) continue;
      dists.push_back((data.row(i) - data.row(j)).norm());
    }
  }
  const size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    median = 0.5 * (median +
                    *std::max_element(dists.begin(), dists.begin() + mid));
  }
  if (!(median > 0.0)) {
    Fail(ErrorCode::kDegenerateData,
         "median pairwise distance is zero; supply a length scale explicitly");
  }
  return median;
}

}  // namespace dphp

#endif  // DPHP_HERMITE_HPP_
