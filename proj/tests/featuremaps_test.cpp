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

#include "dphp/featuremaps.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "test_util.hpp"

namespace dphp {
namespace {

constexpr double kNormSlack = 1e-13;

Vector RandomVector(int n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

SumMapSpec SumSpec(int d, double rho, int order) {
  SumMapSpec s;
  s.input_dim = d;
  s.bases = {HermiteBasis(rho, order)};
  return s;
}

ProductMapSpec ProductSpec(int d, double rho, int order, std::vector<int> dims) {
  ProductMapSpec p;
  p.input_dim = d;
  p.basis = HermiteBasis(rho, order);
  p.dims = std::move(dims);
  return p;
}

TEST(SumMap, OneDimensionEqualsHpFeatures) {
  const SumMapSpec s = SumSpec(1, 0.4, 6);
  Vector x(1);
  x << 0.37;
  EXPECT_EQ(SumMap(x, s), HpFeatures(0.37, s.bases[0]));
}

TEST(SumMap, ValueAtOrigin) {
  const Vector v = SumMap(Vector::Zero(2), SumSpec(2, 0.5, 1));
  ASSERT_EQ(v.size(), 4);
  const double a = std::pow(0.75, 0.25) / std::sqrt(2.0);
  EXPECT_NEAR(v[0], a, 1e-15);
  EXPECT_NEAR(v[0], 0.658037, 1e-6);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_NEAR(v[2], a, 1e-15);
  EXPECT_EQ(v[3], 0.0);
}

TEST(SumMap, InnerProductIsAverageOfCoordinateKernels) {
  std::mt19937_64 rng(1);
  const SumMapSpec s = SumSpec(4, 0.3, 10);
  for (int t = 0; t < 20; ++t) {
    const Vector x = RandomVector(4, rng), y = RandomVector(4, rng);
    double oracle = 0.0;
    for (int d = 0; d < 4; ++d) {
      oracle += HpFeatures(x[d], s.bases[0]).dot(HpFeatures(y[d], s.bases[0]));
    }
    EXPECT_NEAR(SumMap(x, s).dot(SumMap(y, s)), oracle / 4.0, 1e-12);
    EXPECT_LE(SumMap(x, s).squaredNorm(), 1.0 + kNormSlack);
  }
}

TEST(SumMap, PerDimensionBases) {
  SumMapSpec s;
  s.input_dim = 2;
  s.bases = {HermiteBasis(0.2, 3), HermiteBasis(0.7, 3)};
  Vector x(2);
  x << 0.5, -1.0;
  const Vector v = SumMap(x, s);
  EXPECT_NEAR((v.head(4) - HpFeatures(0.5, s.bases[0]) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((v.tail(4) - HpFeatures(-1.0, s.bases[1]) / std::sqrt(2.0)).norm(), 0.0, 1e-15);
  s.bases = {HermiteBasis(0.2, 3), HermiteBasis(0.7, 4)};
  EXPECT_DPHP_ERROR(kInvalidArgument, Validate(s));
}

TEST(SumMap, InputAffineShiftsAndScales) {
  const SumMapSpec s = MakeSumSpec(1, 5, 0.1, SumKernelScale::kGlobal, {0.5, 10.0});
  EXPECT_NEAR(s.bases[0].rho, RhoFromLengthScale(1.0), 1e-15);
  Vector x(1);
  x << 0.62;
  EXPECT_NEAR((SumMap(x, s) - HpFeatures(1.2, s.bases[0])).norm(), 0.0, 1e-14);
}

TEST(SumMap, AmGmScaleShrinksLengthScale) {
  const SumMapSpec s = MakeSumSpec(4, 3, 2.0, SumKernelScale::kAmGm);
  EXPECT_NEAR(s.bases[0].rho, RhoFromLengthScale(1.0), 1e-15);
}

TEST(SumMap, DimensionMismatch) {
  EXPECT_DPHP_ERROR(kInvalidArgument, SumMap(Vector::Zero(3), SumSpec(2, 0.5, 1)));
}

TEST(ProductMap, SingleDimensionEqualsHpFeatures) {
  const ProductMapSpec p = ProductSpec(3, 0.5, 4, {1});
  Vector x(3);
  x << 9.0, 0.25, -7.0;
  EXPECT_EQ(ProductMap(x, p), HpFeatures(0.25, p.basis));
}

TEST(ProductMap, RowMajorOrder) {
  const ProductMapSpec p = ProductSpec(2, 0.5, 2, {0, 1});
  Vector x(2);
  x << 0.3, -0.4;
  const Vector a = HpFeatures(0.3, p.basis), b = HpFeatures(-0.4, p.basis);
  const Vector v = ProductMap(x, p);
  ASSERT_EQ(v.size(), 9);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(v[3 * i + j], a[i] * b[j]);
  }
}

TEST(ProductMap, InnerProductFactorizes) {
  std::mt19937_64 rng(2);
  for (int k = 1; k <= 3; ++k) {
    std::vector<int> dims;
    for (int d = 0; d < k; ++d) dims.push_back(d + 1);
    const ProductMapSpec p = ProductSpec(5, 0.45, 6, dims);
    for (int t = 0; t < 10; ++t) {
      const Vector x = RandomVector(5, rng), y = RandomVector(5, rng);
      double oracle = 1.0, norm = 1.0;
      for (int d : dims) {
        oracle *= HpFeatures(x[d], p.basis).dot(HpFeatures(y[d], p.basis));
        norm *= HpFeatures(x[d], p.basis).norm();
      }
      EXPECT_NEAR(ProductMap(x, p).dot(ProductMap(y, p)), oracle, 1e-12);
      EXPECT_NEAR(ProductMap(x, p).norm(), norm, 1e-12);
      EXPECT_LE(norm, 1.0 + kNormSlack);
    }
  }
}

TEST(ProductMap, SizeCap) {
  EXPECT_DPHP_ERROR(kCapacity, MakeProductSpec(10, 9, 1.0, {0, 1, 2, 3, 4, 5, 6}));
  EXPECT_DPHP_ERROR(kCapacity, MakeProductSpec(3, 1, 1.0, {0, 1, 2}, {}, 7));
  EXPECT_NO_THROW(MakeProductSpec(3, 1, 1.0, {0, 1, 2}, {}, 8));
  EXPECT_EQ(ProductLength(9, 6), 1000000);
}

TEST(ProductMap, InvalidDims) {
  EXPECT_DPHP_ERROR(kInvalidArgument, MakeProductSpec(3, 2, 1.0, {0, 3}));
  EXPECT_DPHP_ERROR(kInvalidArgument, MakeProductSpec(3, 2, 1.0, {1, 1}));
  EXPECT_DPHP_ERROR(kInvalidArgument, MakeProductSpec(3, 2, 1.0, {}));
  EXPECT_EQ(MakeProductSpec(4, 2, 1.0, {3, 0}).dims, (std::vector<int>{0, 3}));
}

TEST(SubsampleDims, FullSelection) {
  Rng rng = Substream(1, "subsample");
  EXPECT_EQ(SubsampleDims(5, 5, rng), (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(SubsampleDims, Deterministic) {
  Rng a = Substream(9, "subsample"), b = Substream(9, "subsample");
  for (int t = 0; t < 20; ++t) EXPECT_EQ(SubsampleDims(30, 4, a), SubsampleDims(30, 4, b));
}

TEST(SubsampleDims, Uniform) {
  Rng rng = Substream(4, "subsample");
  std::vector<int> counts(10, 0);
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const auto s = SubsampleDims(10, 2, rng);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_LT(s[0], s[1]);
    for (int d : s) ++counts[static_cast<size_t>(d)];
  }
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / draws, 0.2, 0.02);
}

TEST(SubsampleDims, Errors) {
  Rng rng = Substream(1, "subsample");
  EXPECT_DPHP_ERROR(kInvalidArgument, SubsampleDims(3, 4, rng));
  EXPECT_DPHP_ERROR(kInvalidArgument, SubsampleDims(3, 0, rng));
}

TEST(CombinedMap, LengthsAdd) {
  CombinedMapSpec c{ProductSpec(784, 0.5, 20, {10, 400}), SumSpec(784, 0.5, 100)};
  EXPECT_EQ(FeatureLength(FeatureMapSpec(c)), 79625);
  EXPECT_EQ(FeatureLength(FeatureMapSpec(c.sum)), 79184);
  EXPECT_EQ(FeatureLength(FeatureMapSpec(c.product)), 441);
}

TEST(CombinedMap, ConcatenatesParts) {
  std::mt19937_64 rng(5);
  CombinedMapSpec c{ProductSpec(4, 0.5, 3, {0, 2}), SumSpec(4, 0.3, 5)};
  const Vector x = RandomVector(4, rng), y = RandomVector(4, rng);
  const Vector hx = CombinedMap(x, c), hy = CombinedMap(y, c);
  const Vector px = ProductMap(x, c.product), sx = SumMap(x, c.sum);
  EXPECT_EQ(hx.head(px.size()), px);
  EXPECT_EQ(hx.tail(sx.size()), sx);
  EXPECT_NEAR(hx.dot(hy), px.dot(ProductMap(y, c.product)) + sx.dot(SumMap(y, c.sum)), 1e-12);
  EXPECT_LE(hx.squaredNorm(), 2.0 + kNormSlack);
  CombinedMapSpec c2 = c;
  c2.product.dims = {1, 3};
  const Vector h2 = CombinedMap(x, c2);
  EXPECT_EQ(h2.tail(sx.size()), sx);
  EXPECT_NE(h2.head(px.size()), px);
}

TEST(CombinedMap, PartsMustAgree) {
  CombinedMapSpec c{ProductSpec(3, 0.5, 3, {0}), SumSpec(4, 0.3, 5)};
  EXPECT_DPHP_ERROR(kInvalidArgument, Validate(c));
}

TEST(RffMap, UnitNorm) {
  std::mt19937_64 rng(6);
  const RffMapSpec r = MakeRffSpec(3, 64, 0.7, 11);
  for (int t = 0; t < 10; ++t) {
    EXPECT_NEAR(RffMap(RandomVector(3, rng, 5.0), r).squaredNorm(), 1.0, 1e-14);
  }
}

TEST(RffMap, Origin) {
  const RffMapSpec r = MakeRffSpec(2, 10, 1.0, 3);
  const Vector v = RffMap(Vector::Zero(2), r);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(v[i], std::sqrt(0.2));
  for (int i = 5; i < 10; ++i) EXPECT_EQ(v[i], 0.0);
}

TEST(RffMap, ExpectationMatchesKernel) {
  Vector x(2), y(2);
  x << 0.2, 0.1;
  y << 0.8, 0.9;  // distance 1
  double sum = 0.0;
  for (uint64_t s = 0; s < 200; ++s) {
    const RffMapSpec r = MakeRffSpec(2, 100, 1.0, s);
    sum += RffMap(x, r).dot(RffMap(y, r));
  }
  EXPECT_NEAR(sum / 200.0, std::exp(-0.5), 0.02);
}

TEST(RffMap, FrequenciesFollowLengthScale) {
  const RffMapSpec r = MakeRffSpec(1, 20000, 0.5, 1);
  const double var = r.omega.squaredNorm() / static_cast<double>(r.omega.size());
  EXPECT_NEAR(var, 4.0, 0.15);
  EXPECT_EQ(MakeRffSpec(2, 8, 1.0, 5).omega, MakeRffSpec(2, 8, 1.0, 5).omega);
}

TEST(RffMap, Errors) {
  EXPECT_DPHP_ERROR(kInvalidArgument, MakeRffSpec(2, 7, 1.0, 1));
  EXPECT_DPHP_ERROR(kInvalidArgument, MakeRffSpec(2, 8, 0.0, 1));
  EXPECT_DPHP_ERROR(kInvalidArgument, RffMap(Vector::Zero(3), MakeRffSpec(2, 8, 1.0, 1)));
}

TEST(GaussianKernel, Values) {
  EXPECT_EQ(GaussianKernel(0.4, 0.4, 2.0), 1.0);
  EXPECT_NEAR(GaussianKernel(0.0, 1.0, 1.0), 0.606531, 1e-6);
  EXPECT_EQ(GaussianKernel(0.3, -1.2, 0.7), GaussianKernel(-1.2, 0.3, 0.7));
  EXPECT_DPHP_ERROR(kInvalidArgument, GaussianKernel(0.0, 1.0, 0.0));
}

TEST(ApproxError, ExactForHighOrder) {
  std::mt19937_64 rng(7);
  Matrix x(30, 1), y(30, 1);
  for (int i = 0; i < 30; ++i) {
    x(i, 0) = RandomVector(1, rng)[0];
    y(i, 0) = 1.0 + RandomVector(1, rng)[0];
  }
  const double l = 1.1;
  EXPECT_LE(ApproxError(x, y, MakeSumSpec(1, 200, l), l), 1e-8);
}

TEST(ApproxError, SingletonEqualsNormDeficit) {
  Matrix x(1, 1);
  x << 0.6;
  const SumMapSpec s = MakeSumSpec(1, 3, 0.9);
  EXPECT_NEAR(ApproxError(x, x, s, 0.9), 1.0 - HpFeatures(0.6, s.bases[0]).squaredNorm(), 1e-15);
}

TEST(ApproxError, HpErrorNonIncreasingInOrder) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Matrix x(100, 1), y(100, 1);
  for (int i = 0; i < 100; ++i) {
    x(i, 0) = normal(rng);
    y(i, 0) = 1.0 + normal(rng);
  }
  Matrix both(200, 1);
  both << x, y;
  const double l = MedianHeuristic(both);
  double prev = INFINITY;
  for (int c = 0; c <= 30; ++c) {
    const double e = ApproxError(x, y, MakeSumSpec(1, c, l), l);
    EXPECT_LE(e, prev + 1e-9) << c;
    prev = e;
  }
}

TEST(Fingerprint, DistinguishesSpecs) {
  const FeatureMapSpec a = MakeSumSpec(2, 3, 1.0);
  const FeatureMapSpec b = MakeSumSpec(2, 4, 1.0);
  const FeatureMapSpec c = MakeSumSpec(2, 3, 1.0, SumKernelScale::kGlobal, {0.5, 1.0});
  const FeatureMapSpec p1 = MakeProductSpec(3, 2, 1.0, {0, 1});
  const FeatureMapSpec p2 = MakeProductSpec(3, 2, 1.0, {0, 2});
  const FeatureMapSpec r1 = MakeRffSpec(2, 8, 1.0, 1);
  const FeatureMapSpec r2 = MakeRffSpec(2, 8, 1.0, 2);
  EXPECT_EQ(Fingerprint(a), Fingerprint(MakeSumSpec(2, 3, 1.0)));
  EXPECT_NE(Fingerprint(a), Fingerprint(b));
  EXPECT_NE(Fingerprint(a), Fingerprint(c));
  EXPECT_NE(Fingerprint(p1), Fingerprint(p2));
  EXPECT_NE(Fingerprint(r1), Fingerprint(r2));
}

TEST(FeatureMatrix, RowsMatchPointwiseMaps) {
  std::mt19937_64 rng(9);
  Matrix data(5, 3);
  for (int i = 0; i < 5; ++i) data.row(i) = RandomVector(3, rng).transpose();
  const FeatureMapSpec spec = CombinedMapSpec{ProductSpec(3, 0.5, 2, {0, 2}), SumSpec(3, 0.4, 4)};
  const Matrix f = FeatureMatrix(data, spec);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(f.row(i).transpose(), EvaluateMap(data.row(i).transpose(), spec));
  }
}

}  // namespace
}  // namespace dphp
