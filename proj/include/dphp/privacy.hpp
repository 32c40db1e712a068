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

// Gaussian-mechanism calibration, budget splitting and composition for the
// released mean embeddings.

#ifndef DPHP_PRIVACY_HPP_
#define DPHP_PRIVACY_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "dphp/embedding.hpp"
#include "dphp/error.hpp"
#include "dphp/rng.hpp"

namespace dphp {

enum class CalibrationMethod { kClassical, kAnalytic };

inline const char* CalibrationMethodName(CalibrationMethod m) {
  return m == CalibrationMethod::kClassical ? "classical" : "analytic";
}

inline CalibrationMethod CalibrationMethodFromName(const std::string& name) {
  if (name == "classical") return CalibrationMethod::kClassical;
  if (name == "analytic") return CalibrationMethod::kAnalytic;
  Fail(ErrorCode::kInvalidArgument, "unknown calibration method: " + name);
}

struct EpsilonDelta {
  double epsilon = 0.0;
  double delta = 0.0;
};

struct PrivacyBudget {
  double epsilon_total = 1.0;
  double delta_total = 1e-5;
  // Share of epsilon (and delta) spent on the sum embedding.
  double split_fraction = 0.8;
  int num_product_releases = 1;
};

struct NoiseCalibration {
  double sigma = 0.0;        // noise std is sigma * sensitivity
  double sensitivity = 1.0;  // Delta
  double epsilon = 0.0;
  double delta = 0.0;
  CalibrationMethod method = CalibrationMethod::kAnalytic;

  double noise_stddev() const { return sigma * sensitivity; }
};

// Replace-one sensitivity of a mean embedding whose per-sample features have
// norm at most one: 2/m for sum, product and Fourier parts alike.
inline double SensitivityBound(int64_t m, PartTag /*part*/) {
  Require(m >= 1, "sensitivity needs at least one sample");
  return 2.0 / static_cast<double>(m);
}

// Replace-one L2 sensitivity of the class-frequency vector counts/m.
inline double ClassFrequencySensitivity(int64_t m) {
  Require(m >= 1, "sensitivity needs at least one sample");
  return std::sqrt(2.0) / static_cast<double>(m);
}

inline double StandardNormalCdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Smallest delta for which N(0, sigma^2) noise on a unit-sensitivity query is
// (epsilon, delta)-DP:
//   Phi(1/(2 sigma) - eps sigma) - e^eps Phi(-1/(2 sigma) - eps sigma).
inline double GaussianMechanismDelta(double sigma, double epsilon) {
  const double a = 1.0 / (2.0 * sigma);
  const double b = epsilon * sigma;
  const double lower = StandardNormalCdf(-a - b);
  const double second = lower > 0.0 ? std::exp(epsilon + std::log(lower)) : 0.0;
  return StandardNormalCdf(a - b) - second;
}

inline double ClassicalSigma(double epsilon, double delta) {
  return std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

inline NoiseCalibration CalibrateSigma(double epsilon, double delta,
                                       CalibrationMethod method) {
  Require(std::isfinite(epsilon) && epsilon > 0.0, "epsilon must be positive");
  Require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  NoiseCalibration calib;
  calib.epsilon = epsilon;
  calib.delta = delta;
  calib.method = method;
  if (method == CalibrationMethod::kClassical) {
    if (epsilon > 1.0) {
      Fail(ErrorCode::kUnsupported,
           "classical calibration only holds for epsilon <= 1; use analytic");
    }
    calib.sigma = ClassicalSigma(epsilon, delta);
    return calib;
  }
  // GaussianMechanismDelta is decreasing in sigma; bracket then bisect.
  double hi = 1.0;
  int guard = 0;
  while (GaussianMechanismDelta(hi, epsilon) > delta) {
    hi *= 2.0;
    if (++guard > 200) Fail(ErrorCode::kInternal, "cannot bracket sigma");
  }
  double lo = hi / 2.0;
  guard = 0;
  while (GaussianMechanismDelta(lo, epsilon) <= delta) {
    lo /= 2.0;
    if (++guard > 200) Fail(ErrorCode::kInternal, "cannot bracket sigma");
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-13 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (GaussianMechanismDelta(mid, epsilon) <= delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  calib.sigma = hi;
  return calib;
}

inline std::pair<EpsilonDelta, EpsilonDelta> SplitBudget(
    const PrivacyBudget& budget) {
  Require(budget.epsilon_total > 0.0, "epsilon must be positive");
  Require(budget.delta_total > 0.0 && budget.delta_total < 1.0,
          "delta must lie in (0, 1)");
  Require(budget.split_fraction > 0.0 && budget.split_fraction < 1.0,
          "split fraction must lie in the open interval (0, 1)");
  const double f = budget.split_fraction;
  EpsilonDelta first{f * budget.epsilon_total, f * budget.delta_total};
  EpsilonDelta second{budget.epsilon_total - first.epsilon,
                      budget.delta_total - first.delta};
  return {first, second};
}

// Per-release calibration for `releases` Gaussian releases sharing
// (epsilon, delta): E releases of sensitivity Delta behave as one release of
// sensitivity Delta * sqrt(E), so the per-release sigma grows by sqrt(E).
inline NoiseCalibration ComposeProductReleases(int releases, double epsilon,
                                               double delta) {
  Require(releases >= 1, "composition needs at least one release");
  NoiseCalibration calib =
      CalibrateSigma(epsilon, delta, CalibrationMethod::kAnalytic);
  calib.sigma *= std::sqrt(static_cast<double>(releases));
  return calib;
}

// Adds i.i.d. N(0, (sigma * Delta)^2) to every entry, drawn in row-major order.
inline LabeledMeanEmbedding Privatize(const LabeledMeanEmbedding& emb,
                                      const NoiseCalibration& calib, Rng& rng) {
  const double expected = SensitivityBound(emb.sample_count, emb.part);
  if (std::abs(calib.sensitivity - expected) > 1e-12 * expected) {
    Fail(ErrorCode::kInvalidArgument,
         "calibration sensitivity " + std::to_string(calib.sensitivity) +
             " does not match the embedding's bound " + std::to_string(expected));
  }
  Require(calib.sigma >= 0.0 && std::isfinite(calib.sigma),
          "sigma must be non-negative");
  LabeledMeanEmbedding out = emb;
  const double stddev = calib.noise_stddev();
  if (stddev > 0.0) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (Eigen::Index i = 0; i < out.matrix.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.matrix.cols(); ++j) {
        out.matrix(i, j) += normal(rng);
      }
    }
  }
  out.privatized = true;
  out.noise_sensitivity = calib.sensitivity;
  out.noise_sigma = std::hypot(emb.noise_sigma, calib.sigma);
  return out;
}

}  // namespace dphp

#endif  // DPHP_PRIVACY_HPP_
