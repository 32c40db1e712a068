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

#include "dphp/privacy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dphp/embedding.hpp"
#include "test_util.hpp"

namespace dphp {
namespace {

TEST(SensitivityBound, Values) {
  EXPECT_DOUBLE_EQ(SensitivityBound(100, PartTag::kSum), 0.02);
  EXPECT_DOUBLE_EQ(SensitivityBound(1, PartTag::kProduct), 2.0);
  EXPECT_DOUBLE_EQ(SensitivityBound(50, PartTag::kRff), 0.04);
  EXPECT_DPHP_ERROR(kInvalidArgument, SensitivityBound(0, PartTag::kSum));
}

// Max Frobenius change of the embedding over random replace-one neighbours.
double MaxNeighbourChange(const FeatureMapSpec& spec, int m, int dim, int trials, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_int_distribution<int> label(0, 2), row(0, m - 1);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Matrix x(m, dim);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    std::vector<int> y(static_cast<size_t>(m));
    for (auto& v : y) v = label(rng);
    Matrix x2 = x;
    std::vector<int> y2 = y;
    const int r = row(rng);
    for (int d = 0; d < dim; ++d) x2(r, d) = normal(rng);
    y2[static_cast<size_t>(r)] = label(rng);
    const auto a = MeanEmbeddingParts(x, y, spec, 3);
    const auto b = MeanEmbeddingParts(x2, y2, spec, 3);
    for (size_t p = 0; p < a.size(); ++p) {
      worst = std::max(worst, (a[p].matrix - b[p].matrix).norm());
    }
  }
  return worst;
}

TEST(SensitivityBound, HoldsForNeighbours) {
  const int dim = 3;
  const std::vector<FeatureMapSpec> specs{
      MakeSumSpec(dim, 10, 0.8), MakeProductSpec(dim, 4, 0.8, {0, 1, 2}),
      MakeRffSpec(dim, 100, 0.8, 3),
      CombinedMapSpec{MakeProductSpec(dim, 3, 0.8, {0, 2}), MakeSumSpec(dim, 5, 0.8)}};
  for (const auto& spec : specs) {
    EXPECT_LE(MaxNeighbourChange(spec, 50, dim, 200, 11), 0.04);
  }
}

TEST(CalibrateSigma, Classical) {
  const NoiseCalibration c = CalibrateSigma(1.0, 1e-5, CalibrationMethod::kClassical);
  EXPECT_NEAR(c.sigma, std::sqrt(2.0 * std::log(125000.0)), 1e-12);
  EXPECT_NEAR(c.sigma, 4.844805, 1e-6);
  EXPECT_EQ(c.method, CalibrationMethod::kClassical);
}

TEST(CalibrateSigma, ClassicalRejectsLargeEpsilon) {
  EXPECT_DPHP_ERROR(kUnsupported, CalibrateSigma(2.0, 1e-5, CalibrationMethod::kClassical));
  EXPECT_NO_THROW(CalibrateSigma(2.0, 1e-5, CalibrationMethod::kAnalytic));
}

// Independent evaluation of the Gaussian-mechanism privacy profile.
double ProfileDelta(double sigma, double eps) {
  auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  return cdf(1.0 / (2.0 * sigma) - eps * sigma) -
         std::exp(eps) * cdf(-1.0 / (2.0 * sigma) - eps * sigma);
}

TEST(CalibrateSigma, AnalyticIsTightAndBelowClassical) {
  for (double eps : {0.1, 0.5, 1.0}) {
    for (double delta : {1e-6, 1e-5, 1e-3}) {
      const double s = CalibrateSigma(eps, delta, CalibrationMethod::kAnalytic).sigma;
      EXPECT_LE(s, ClassicalSigma(eps, delta));
      EXPECT_LE(ProfileDelta(s, eps), delta + 1e-9 * delta);
      EXPECT_NEAR(ProfileDelta(s, eps), delta, 1e-9);
      EXPECT_GT(ProfileDelta(0.999 * s, eps), delta);
    }
  }
  for (double eps : {2.0, 5.0}) {
    const double s = CalibrateSigma(eps, 1e-5, CalibrationMethod::kAnalytic).sigma;
    EXPECT_NEAR(ProfileDelta(s, eps), 1e-5, 1e-9);
  }
}

TEST(CalibrateSigma, MonotoneInDelta) {
  EXPECT_LT(CalibrateSigma(1.0, 0.5, CalibrationMethod::kAnalytic).sigma,
            CalibrateSigma(1.0, 1e-5, CalibrationMethod::kAnalytic).sigma);
}

TEST(CalibrateSigma, Errors) {
  EXPECT_DPHP_ERROR(kInvalidArgument, CalibrateSigma(0.0, 1e-5, CalibrationMethod::kAnalytic));
  EXPECT_DPHP_ERROR(kInvalidArgument, CalibrateSigma(-1.0, 1e-5, CalibrationMethod::kAnalytic));
  EXPECT_DPHP_ERROR(kInvalidArgument, CalibrateSigma(1.0, 0.0, CalibrationMethod::kAnalytic));
  EXPECT_DPHP_ERROR(kInvalidArgument, CalibrateSigma(1.0, 1.0, CalibrationMethod::kAnalytic));
  EXPECT_DPHP_ERROR(kInvalidArgument, CalibrationMethodFromName("laplace"));
}

TEST(SplitBudget, Arithmetic) {
  auto [a, b] = SplitBudget({1.0, 1e-5, 0.5, 1});
  EXPECT_DOUBLE_EQ(a.epsilon, 0.5);
  EXPECT_DOUBLE_EQ(b.epsilon, 0.5);
  auto [c, d] = SplitBudget({1.0, 1e-5, 0.8, 1});
  EXPECT_DOUBLE_EQ(c.epsilon, 0.8);
  EXPECT_NEAR(c.delta, 8e-6, 1e-20);
  EXPECT_NEAR(d.epsilon, 0.2, 1e-15);
  EXPECT_NEAR(d.delta, 2e-6, 1e-20);
  EXPECT_DOUBLE_EQ(c.epsilon + d.epsilon, 1.0);
  EXPECT_DOUBLE_EQ(c.delta + d.delta, 1e-5);
  EXPECT_DPHP_ERROR(kInvalidArgument, SplitBudget({1.0, 1e-5, 1.0, 1}));
  EXPECT_DPHP_ERROR(kInvalidArgument, SplitBudget({1.0, 1e-5, 0.0, 1}));
}

TEST(ComposeProductReleases, ScalesWithSqrtReleases) {
  const double one = CalibrateSigma(0.2, 2e-6, CalibrationMethod::kAnalytic).sigma;
  EXPECT_EQ(ComposeProductReleases(1, 0.2, 2e-6).sigma, one);
  EXPECT_NEAR(ComposeProductReleases(4, 0.2, 2e-6).sigma, 2.0 * one, 1e-12);
  double prev = 0.0;
  for (int e = 1; e <= 10; ++e) {
    const double s = ComposeProductReleases(e, 0.2, 2e-6).sigma;
    EXPECT_GT(s, prev);
    prev = s;
  }
  EXPECT_GT(ComposeProductReleases(3, 0.1, 2e-6).sigma, ComposeProductReleases(3, 0.2, 2e-6).sigma);
  EXPECT_DPHP_ERROR(kInvalidArgument, ComposeProductReleases(0, 0.2, 2e-6));
}

TEST(ComposeProductReleases, EquivalentSingleMechanism) {
  // E releases with per-release std sigma_per * Delta equal one mechanism of
  // sensitivity Delta * sqrt(E) and std sigma_per * Delta, whose noise
  // multiplier relative to its own sensitivity is sigma_per / sqrt(E).
  for (int e : {1, 5, 30}) {
    const double per = ComposeProductReleases(e, 0.4, 4e-6).sigma;
    const double effective = per / std::sqrt(static_cast<double>(e));
    EXPECT_NEAR(ProfileDelta(effective, 0.4), 4e-6, 1e-9);
  }
}

LabeledMeanEmbedding ZeroEmbedding(int rows, int cols, int64_t m) {
  LabeledMeanEmbedding e;
  e.matrix = Matrix::Zero(rows, cols);
  e.sample_count = m;
  e.part = PartTag::kSum;
  e.fingerprint = 42;
  return e;
}

NoiseCalibration Calib(double sigma, int64_t m) {
  NoiseCalibration c;
  c.sigma = sigma;
  c.sensitivity = SensitivityBound(m, PartTag::kSum);
  return c;
}

TEST(Privatize, ZeroSigmaIsIdentity) {
  LabeledMeanEmbedding e = ZeroEmbedding(3, 2, 10);
  e.matrix.setRandom();
  Rng rng = Substream(1, "noise");
  const auto out = Privatize(e, Calib(0.0, 10), rng);
  EXPECT_EQ(out.matrix, e.matrix);
  EXPECT_TRUE(out.privatized);
}

TEST(Privatize, NoiseStddev) {
  const auto e = ZeroEmbedding(1000, 100, 40);
  Rng rng = Substream(2, "noise");
  const auto c = Calib(3.0, 40);
  const auto out = Privatize(e, c, rng);
  const double sd = std::sqrt(out.matrix.squaredNorm() / static_cast<double>(out.matrix.size()));
  EXPECT_NEAR(sd / c.noise_stddev(), 1.0, 0.02);
  EXPECT_EQ(out.fingerprint, e.fingerprint);
  EXPECT_EQ(out.sample_count, e.sample_count);
  EXPECT_EQ(out.part, e.part);
  EXPECT_DOUBLE_EQ(out.noise_sigma, 3.0);
}

TEST(Privatize, TwiceAddsVariance) {
  const auto e = ZeroEmbedding(1000, 100, 40);
  Rng rng = Substream(3, "noise");
  const auto c = Calib(1.5, 40);
  const auto twice = Privatize(Privatize(e, c, rng), c, rng);
  const double var = twice.matrix.squaredNorm() / static_cast<double>(twice.matrix.size());
  const double expected = 2.0 * c.noise_stddev() * c.noise_stddev();
  EXPECT_NEAR(var / expected, 1.0, 0.03);
  EXPECT_NEAR(twice.noise_sigma, 1.5 * std::sqrt(2.0), 1e-12);
}

TEST(Privatize, Deterministic) {
  const auto e = ZeroEmbedding(5, 3, 10);
  Rng a = Substream(4, "noise"), b = Substream(4, "noise");
  EXPECT_EQ(Privatize(e, Calib(1.0, 10), a).matrix, Privatize(e, Calib(1.0, 10), b).matrix);
}

TEST(Privatize, RefusesWrongSensitivity) {
  const auto e = ZeroEmbedding(5, 3, 10);
  Rng rng = Substream(5, "noise");
  NoiseCalibration c = Calib(1.0, 10);
  c.sensitivity = 0.1;
  EXPECT_DPHP_ERROR(kInvalidArgument, Privatize(e, c, rng));
}

}  // namespace
}  // namespace dphp
