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

// Multi-dimensional feature maps built from Hermite features, plus the
// random Fourier feature baseline.
//
//   Sum:      h_s(x) = [phi(x_1); ...; phi(x_D)] / sqrt(D)
//   Product:  h_p(x) = vec(phi(x_{d1}) (x) phi(x_{d2}) (x) ...), first selected
//             dimension slowest-varying, dimensions in ascending order
//   Combined: h_c(x) = [h_p(x); h_s(x)]
//   Fourier:  sqrt(2/A) [cos(w_j . x)]_j ++ sqrt(2/A) [sin(w_j . x)]_j
//
// Hermite maps evaluate the basis at (x_d - offset) * scale. The basis is
// accurate on a bounded window around zero, so the affine lets normalized
// data occupy that window. Defaults are offset 0, scale 1.

#ifndef DPHP_FEATUREMAPS_HPP_
#define DPHP_FEATUREMAPS_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dphp/error.hpp"
#include "dphp/hermite.hpp"
#include "dphp/rng.hpp"

namespace dphp {

inline constexpr int64_t kDefaultProductSizeCap = 1000000;

enum class SumKernelScale { kGlobal, kAmGm };

struct SumMapSpec {
  int input_dim = 1;
  // Either one shared basis or one basis per input dimension.
  std::vector<HermiteBasis> bases;
  double offset = 0.0;
  double scale = 1.0;

  const HermiteBasis& basis(int d) const {
    return bases.size() == 1 ? bases.front() : bases[static_cast<size_t>(d)];
  }
};

struct ProductMapSpec {
  int input_dim = 1;
  HermiteBasis basis;
  std::vector<int> dims;  // strictly ascending, within [0, input_dim)
  double offset = 0.0;
  double scale = 1.0;
  int64_t size_cap = kDefaultProductSizeCap;
};

struct CombinedMapSpec {
  ProductMapSpec product;
  SumMapSpec sum;
};

struct RffMapSpec {
  int input_dim = 1;
  int num_features = 2;  // A, even
  double length_scale = 1.0;
  uint64_t seed = 0;
  Matrix omega;  // (A/2) x D
};

using FeatureMapSpec =
    std::variant<SumMapSpec, ProductMapSpec, CombinedMapSpec, RffMapSpec>;

// ---------------------------------------------------------------------------
// Construction and validation.

inline void Validate(const SumMapSpec& spec) {
  Require(spec.input_dim >= 1, "sum map needs input_dim >= 1");
  Require(spec.bases.size() == 1 ||
              spec.bases.size() == static_cast<size_t>(spec.input_dim),
          "sum map needs one shared basis or one basis per dimension");
  for (const auto& b : spec.bases) b.Validate();
  if (spec.bases.size() > 1) {
    for (const auto& b : spec.bases) {
      Require(b.order == spec.bases.front().order,
              "per-dimension bases must share the Hermite order");
    }
  }
  Require(std::isfinite(spec.offset), "offset must be finite");
  Require(std::isfinite(spec.scale) && spec.scale > 0.0, "scale must be positive");
}

inline int64_t ProductLength(int order, int dims) {
  int64_t len = 1;
  for (int i = 0; i < dims; ++i) {
    if (len > (int64_t{1} << 53) / (order + 1)) return INT64_MAX;
    len *= order + 1;
  }
  return len;
}

inline void Validate(const ProductMapSpec& spec) {
  Require(spec.input_dim >= 1, "product map needs input_dim >= 1");
  spec.basis.Validate();
  Require(!spec.dims.empty(), "product map needs at least one dimension");
  for (size_t i = 0; i < spec.dims.size(); ++i) {
    Require(spec.dims[i] >= 0 && spec.dims[i] < spec.input_dim,
            "product dimension index out of range");
    if (i > 0) {
      Require(spec.dims[i] > spec.dims[i - 1],
              "product dimensions must be distinct and ascending");
    }
  }
  Require(std::isfinite(spec.offset), "offset must be finite");
  Require(std::isfinite(spec.scale) && spec.scale > 0.0, "scale must be positive");
  const int64_t len =
      ProductLength(spec.basis.order, static_cast<int>(spec.dims.size()));
  if (len > spec.size_cap) {
    Fail(ErrorCode::kCapacity,
         "product feature map would have " +
             (len == INT64_MAX ? std::string("overflowing")
                               : std::to_string(len)) +
             " entries, above the cap of " + std::to_string(spec.size_cap));
  }
}

inline void Validate(const RffMapSpec& spec) {
  Require(spec.input_dim >= 1, "Fourier map needs input_dim >= 1");
  Require(spec.num_features >= 2 && spec.num_features % 2 == 0,
          "number of Fourier features must be even and positive");
  Require(spec.omega.rows() == spec.num_features / 2 &&
              spec.omega.cols() == spec.input_dim,
          "frequency matrix shape does not match (A/2) x D");
}

inline void Validate(const CombinedMapSpec& spec) {
  Validate(spec.product);
  Validate(spec.sum);
  Require(spec.product.input_dim == spec.sum.input_dim,
          "combined map parts disagree on input dimension");
}

inline void Validate(const FeatureMapSpec& spec) {
  std::visit([](const auto& s) { Validate(s); }, spec);
}

// Input affine applied before the Hermite basis.
struct InputAffine {
  double offset = 0.0;
  double scale = 1.0;
};

// Shared-basis sum map for a Gaussian kernel of length scale `length_scale`
// in data units. With kAmGm each coordinate kernel uses l / sqrt(D), which
// upper-bounds the joint Gaussian kernel.
inline SumMapSpec MakeSumSpec(int input_dim, int order, double length_scale,
                              SumKernelScale kernel_scale = SumKernelScale::kGlobal,
                              InputAffine affine = {}) {
  Require(input_dim >= 1, "input_dim must be positive");
  Require(affine.scale > 0.0, "input scale must be positive");
  double l = length_scale;
  if (kernel_scale == SumKernelScale::kAmGm) {
    l /= std::sqrt(static_cast<double>(input_dim));
  }
  double rho = RhoFromLengthScale(l * affine.scale);
  ClampRho(rho);
  SumMapSpec spec;
  spec.input_dim = input_dim;
  spec.bases = {HermiteBasis(rho, order)};
  spec.offset = affine.offset;
  spec.scale = affine.scale;
  Validate(spec);
  return spec;
}

inline ProductMapSpec MakeProductSpec(int input_dim, int order,
                                      double length_scale, std::vector<int> dims,
                                      InputAffine affine = {},
                                      int64_t size_cap = kDefaultProductSizeCap) {
  Require(affine.scale > 0.0, "input scale must be positive");
  double rho = RhoFromLengthScale(length_scale * affine.scale);
  ClampRho(rho);
  ProductMapSpec spec;
  spec.input_dim = input_dim;
  spec.basis = HermiteBasis(rho, order);
  std::sort(dims.begin(), dims.end());
  spec.dims = std::move(dims);
  spec.offset = affine.offset;
  spec.scale = affine.scale;
  spec.size_cap = size_cap;
  Validate(spec);
  return spec;
}

// Frequencies drawn i.i.d. from N(0, 1/l^2) per coordinate.
inline RffMapSpec MakeRffSpec(int input_dim, int num_features,
                              double length_scale, uint64_t seed) {
  Require(length_scale > 0.0 && std::isfinite(length_scale),
          "length scale must be positive");
  RffMapSpec spec;
  spec.input_dim = input_dim;
  spec.num_features = num_features;
  spec.length_scale = length_scale;
  spec.seed = seed;
  Require(num_features >= 2 && num_features % 2 == 0,
          "number of Fourier features must be even and positive");
  Rng rng = Substream(seed, "rff-frequencies");
  std::normal_distribution<double> normal(0.0, 1.0 / length_scale);
  spec.omega.resize(num_features / 2, input_dim);
  for (int i = 0; i < spec.omega.rows(); ++i) {
    for (int d = 0; d < input_dim; ++d) spec.omega(i, d) = normal(rng);
  }
  return spec;
}

// D_prod distinct indices drawn uniformly without replacement, ascending.
inline std::vector<int> SubsampleDims(int input_dim, int num_selected, Rng& rng) {
  Require(num_selected >= 1, "must select at least one dimension");
  Require(num_selected <= input_dim,
          "cannot select more dimensions than the input has");
  std::vector<int> all(static_cast<size_t>(input_dim));
  std::iota(all.begin(), all.end(), 0);
  // Partial Fisher-Yates.
  for (int i = 0; i < num_selected; ++i) {
    std::uniform_int_distribution<int> pick(i, input_dim - 1);
    std::swap(all[static_cast<size_t>(i)],
              all[static_cast<size_t>(pick(rng))]);
  }
  all.resize(static_cast<size_t>(num_selected));
  std::sort(all.begin(), all.end());
  return all;
}

// ---------------------------------------------------------------------------
// Evaluation.

inline int64_t FeatureLength(const SumMapSpec& s) {
  return static_cast<int64_t>(s.basis(0).size()) * s.input_dim;
}
inline int64_t FeatureLength(const ProductMapSpec& s) {
  return ProductLength(s.basis.order, static_cast<int>(s.dims.size()));
}
inline int64_t FeatureLength(const CombinedMapSpec& s) {
  return FeatureLength(s.product) + FeatureLength(s.sum);
}
inline int64_t FeatureLength(const RffMapSpec& s) { return s.num_features; }
inline int64_t FeatureLength(const FeatureMapSpec& spec) {
  return std::visit([](const auto& s) { return FeatureLength(s); }, spec);
}

inline int InputDim(const FeatureMapSpec& spec) {
  return std::visit(
      [](const auto& s) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, CombinedMapSpec>) {
          return s.sum.input_dim;
        } else {
          return s.input_dim;
        }
      },
      spec);
}

namespace internal {

inline void CheckDim(const Eigen::Ref<const Vector>& x, int input_dim) {
  Require(x.size() == input_dim, "input has dimension " +
                                     std::to_string(x.size()) + ", expected " +
                                     std::to_string(input_dim));
}

// out = kron(a, b) with b fastest-varying.
inline Vector Kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a[i] * b;
  }
  return out;
}

}  // namespace internal

inline Vector SumMap(const Eigen::Ref<const Vector>& x, const SumMapSpec& spec) {
  internal::CheckDim(x, spec.input_dim);
  const int width = spec.basis(0).size();
  Vector out(static_cast<Eigen::Index>(width) * spec.input_dim);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
  for (int d = 0; d < spec.input_dim; ++d) {
    auto block = out.segment(static_cast<Eigen::Index>(d) * width, width);
    HpFeaturesInto((x[d] - spec.offset) * spec.scale, spec.basis(d), block);
    block *= inv_sqrt_d;
  }
  return out;
}

inline Vector ProductMap(const Eigen::Ref<const Vector>& x,
                         const ProductMapSpec& spec) {
  internal::CheckDim(x, spec.input_dim);
  Validate(spec);
  Vector out = Vector::Ones(1);
  for (int d : spec.dims) {
    out = internal::Kron(out, HpFeatures((x[d] - spec.offset) * spec.scale, spec.basis));
  }
  return out;
}

inline Vector CombinedMap(const Eigen::Ref<const Vector>& x,
                          const CombinedMapSpec& spec) {
  Vector p = ProductMap(x, spec.product);
  Vector s = SumMap(x, spec.sum);
  Vector out(p.size() + s.size());
  out << p, s;
  return out;
}

inline Vector RffMap(const Eigen::Ref<const Vector>& x, const RffMapSpec& spec) {
  internal::CheckDim(x, spec.input_dim);
  Validate(spec);
  const Eigen::Index half = spec.num_features / 2;
  const double scale = std::sqrt(2.0 / spec.num_features);
  const Vector proj = spec.omega * x;
  Vector out(spec.num_features);
  out.head(half) = scale * proj.array().cos();
  out.tail(half) = scale * proj.array().sin();
  return out;
}

inline Vector EvaluateMap(const Eigen::Ref<const Vector>& x,
                          const FeatureMapSpec& spec) {
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SumMapSpec>) return SumMap(x, s);
        if constexpr (std::is_same_v<T, ProductMapSpec>) return ProductMap(x, s);
        if constexpr (std::is_same_v<T, CombinedMapSpec>) return CombinedMap(x, s);
        if constexpr (std::is_same_v<T, RffMapSpec>) return RffMap(x, s);
      },
      spec);
}

// Feature matrix with one row per input row.
inline Matrix FeatureMatrix(const Matrix& data, const FeatureMapSpec& spec) {
  Validate(spec);
  Matrix out(data.rows(), FeatureLength(spec));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    out.row(i) = EvaluateMap(data.row(i).transpose(), spec).transpose();
  }
  return out;
}

inline double GaussianKernel(const Eigen::Ref<const Vector>& x,
                             const Eigen::Ref<const Vector>& y,
                             double length_scale) {
  Require(std::isfinite(length_scale) && length_scale > 0.0,
          "length scale must be positive");
  Require(x.size() == y.size(), "kernel arguments differ in dimension");
  return std::exp(-(x - y).squaredNorm() / (2.0 * length_scale * length_scale));
}

inline double GaussianKernel(double x, double y, double length_scale) {
  Require(std::isfinite(length_scale) && length_scale > 0.0,
          "length scale must be positive");
  return std::exp(-(x - y) * (x - y) / (2.0 * length_scale * length_scale));
}

// Mean absolute deviation between the exact Gaussian kernel and the feature
// inner product over all cross pairs (x_i, y_j).
inline double ApproxError(const Matrix& x, const Matrix& y,
                          const FeatureMapSpec& spec, double length_scale) {
  Require(x.rows() > 0 && y.rows() > 0, "approximation error needs data");
  Require(x.cols() == y.cols(), "sample sets differ in dimension");
  const Matrix fx = FeatureMatrix(x, spec);
  const Matrix fy = FeatureMatrix(y, spec);
  const Matrix approx = fx * fy.transpose();
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      total += std::abs(GaussianKernel(x.row(i).transpose(), y.row(j).transpose(),
                                       length_scale) -
                        approx(i, j));
    }
  }
  return total / static_cast<double>(x.rows() * y.rows());
}

// ---------------------------------------------------------------------------
// Fingerprints identify the exact map an embedding was computed under.

namespace internal {

inline uint64_t HashDouble(uint64_t h, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g;", v);
  return Fnv1a(buf, h);
}

inline uint64_t HashInt(uint64_t h, int64_t v) {
  return Fnv1a(std::to_string(v) + ";", h);
}

inline uint64_t HashSpec(uint64_t h, const SumMapSpec& s) {
  h = Fnv1a("sum;", h);
  h = HashInt(h, s.input_dim);
  for (const auto& b : s.bases) {
    h = HashDouble(h, b.rho);
    h = HashInt(h, b.order);
  }
  h = HashDouble(h, s.offset);
  return HashDouble(h, s.scale);
}

inline uint64_t HashSpec(uint64_t h, const ProductMapSpec& s) {
  h = Fnv1a("product;", h);
  h = HashInt(h, s.input_dim);
  h = HashDouble(h, s.basis.rho);
  h = HashInt(h, s.basis.order);
  for (int d : s.dims) h = HashInt(h, d);
  h = HashDouble(h, s.offset);
  return HashDouble(h, s.scale);
}

inline uint64_t HashSpec(uint64_t h, const CombinedMapSpec& s) {
  h = Fnv1a("combined;", h);
  return HashSpec(HashSpec(h, s.product), s.sum);
}

inline uint64_t HashSpec(uint64_t h, const RffMapSpec& s) {
  h = Fnv1a("rff;", h);
  h = HashInt(h, s.input_dim);
  h = HashInt(h, s.num_features);
  h = HashDouble(h, s.length_scale);
  h = HashInt(h, static_cast<int64_t>(s.seed));
  for (Eigen::Index i = 0; i < s.omega.size(); ++i) {
    h = HashDouble(h, s.omega.data()[i]);
  }
  return h;
}

}  // namespace internal

inline uint64_t Fingerprint(const FeatureMapSpec& spec) {
  return std::visit(
      [](const auto& s) { return internal::HashSpec(0xcbf29ce484222325ULL, s); },
      spec);
}

}  // namespace dphp

#endif  // DPHP_FEATUREMAPS_HPP_
