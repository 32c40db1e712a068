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

// Feed-forward conditional generator and its training loop on the augmented
// MMD loss against (optionally privatized) real-data mean embeddings.

#ifndef DPHP_GENERATOR_HPP_
#define DPHP_GENERATOR_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "dphp/autodiff.hpp"
#include "dphp/embedding.hpp"
#include "dphp/error.hpp"
#include "dphp/featuremaps.hpp"
#include "dphp/hermite.hpp"
#include "dphp/privacy.hpp"
#include "dphp/rng.hpp"

namespace dphp {

enum class Activation { kRelu, kTanh };
enum class Decoder { kIdentity, kSigmoid, kSoftmax };

struct OutputBlock {
  Decoder decoder = Decoder::kSigmoid;
  int width = 1;

  bool operator==(const OutputBlock&) const = default;
};

struct GeneratorArch {
  int latent_dim = 5;
  int num_classes = 1;
  std::vector<int> hidden;
  Activation activation = Activation::kRelu;
  std::vector<OutputBlock> blocks;

  int output_dim() const {
    int total = 0;
    for (const auto& b : blocks) total += b.width;
    return total;
  }
};

struct GeneratorModel {
  GeneratorArch arch;
  std::vector<Matrix> weights;  // in x out
  std::vector<Matrix> biases;   // 1 x out
  uint64_t seed = 0;

  size_t num_layers() const { return weights.size(); }
};

inline void Validate(const GeneratorArch& arch) {
  Require(arch.latent_dim >= 1, "latent dimension must be positive");
  Require(arch.num_classes >= 1, "class count must be positive");
  for (int w : arch.hidden) Require(w >= 1, "hidden widths must be positive");
  Require(!arch.blocks.empty(), "generator needs at least one output block");
  for (const auto& b : arch.blocks) {
    Require(b.width >= 1, "output block width must be positive");
    if (b.decoder == Decoder::kSoftmax) {
      Require(b.width >= 2, "softmax blocks need at least two categories");
    }
  }
}

// Glorot-uniform weights in [-a, a], a = sqrt(6 / (fan_in + fan_out)); zero
// biases.
inline GeneratorModel InitGenerator(const GeneratorArch& arch, uint64_t seed) {
  Validate(arch);
  GeneratorModel model;
  model.arch = arch;
  model.seed = seed;
  Rng rng = Substream(seed, "init");
  std::vector<int> widths{arch.latent_dim + arch.num_classes};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(arch.output_dim());
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l], fan_out = widths[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uni(-a, a);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = uni(rng);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Matrix::Zero(1, fan_out));
  }
  return model;
}

inline Matrix ConditioningInput(const Matrix& z, std::span<const int> labels,
                                int num_classes) {
  Require(static_cast<Eigen::Index>(labels.size()) == z.rows(),
          "latent batch and labels differ in length");
  Matrix in = Matrix::Zero(z.rows(), z.cols() + num_classes);
  in.leftCols(z.cols()) = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = labels[static_cast<size_t>(i)];
    Require(y >= 0 && y < num_classes, "label out of range");
    in(i, z.cols() + y) = 1.0;
  }
  return in;
}

// Records the generator on `tape`. `params` alternates weight, bias per layer.
inline ad::Var ForwardOnTape(ad::Tape& tape, const GeneratorModel& model,
                             std::span<const ad::Var> params, const Matrix& z,
                             std::span<const int> labels) {
  const auto& arch = model.arch;
  if (z.cols() != arch.latent_dim) {
    Fail(ErrorCode::kInvalidArgument, "latent batch has the wrong width");
  }
  Require(params.size() == 2 * model.num_layers(), "parameter count mismatch");
  ad::Var h = tape.Constant(ConditioningInput(z, labels, arch.num_classes));
  for (size_t l = 0; l < model.num_layers(); ++l) {
    h = ad::Affine(h, params[2 * l], params[2 * l + 1]);
    if (l + 1 < model.num_layers()) {
      h = arch.activation == Activation::kRelu ? ad::Relu(h) : ad::Tanh(h);
    }
  }
  std::vector<ad::Var> decoded;
  Eigen::Index at = 0;
  for (const auto& block : arch.blocks) {
    ad::Var part = ad::SliceCols(h, at, block.width);
    switch (block.decoder) {
      case Decoder::kIdentity:
        break;
      case Decoder::kSigmoid:
        part = ad::Sigmoid(part);
        break;
      case Decoder::kSoftmax:
        part = ad::Softmax(part);
        break;
    }
    decoded.push_back(part);
    at += block.width;
  }
  return decoded.size() == 1 ? decoded.front() : ad::ConcatCols(decoded);
}

inline std::vector<ad::Var> ParamsAsConstants(ad::Tape& tape,
                                              const GeneratorModel& model) {
  std::vector<ad::Var> params;
  for (size_t l = 0; l < model.num_layers(); ++l) {
    params.push_back(tape.Constant(model.weights[l]));
    params.push_back(tape.Constant(model.biases[l]));
  }
  return params;
}

inline std::vector<ad::Var> ParamsAsLeaves(ad::Tape& tape,
                                           const GeneratorModel& model) {
  std::vector<ad::Var> params;
  for (size_t l = 0; l < model.num_layers(); ++l) {
    params.push_back(tape.Leaf(model.weights[l]));
    params.push_back(tape.Leaf(model.biases[l]));
  }
  return params;
}

// Decoded (relaxed) generator outputs for latent batch `z` and `labels`.
inline Matrix Forward(const GeneratorModel& model, const Matrix& z,
                      std::span<const int> labels) {
  ad::Tape tape;
  const auto params = ParamsAsConstants(tape, model);
  return tape.value(ForwardOnTape(tape, model, params, z, labels));
}

struct LabelSampler {
  std::vector<double> probs;

  static LabelSampler Uniform(int num_classes) {
    Require(num_classes >= 1, "class count must be positive");
    return LabelSampler{std::vector<double>(static_cast<size_t>(num_classes),
                                            1.0 / num_classes)};
  }

  int num_classes() const { return static_cast<int>(probs.size()); }

  int Sample(Rng& rng) const {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double u = uni(rng);
    double acc = 0.0;
    for (size_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::vector<int> Sample(int64_t n, Rng& rng) const {
    std::vector<int> out(static_cast<size_t>(n));
    for (auto& y : out) y = Sample(rng);
    return out;
  }
};

inline Matrix SampleLatent(int64_t n, int latent_dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, latent_dim);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
  }
  return z;
}

enum class CategoricalMode { kSample, kArgmax };

struct GeneratedData {
  Matrix data;
  std::vector<int> labels;
};

// Draws n samples. Softmax blocks become hard one-hot rows, sampled from the
// softmax or taken at its argmax.
inline GeneratedData Generate(const GeneratorModel& model, int64_t n,
                              const LabelSampler& sampler, Rng& rng,
                              CategoricalMode mode = CategoricalMode::kSample) {
  Require(n >= 0, "sample count must be non-negative");
  Require(sampler.num_classes() == model.arch.num_classes,
          "label sampler disagrees with the generator's class count");
  GeneratedData out;
  out.data.resize(n, model.arch.output_dim());
  if (n == 0) return out;
  out.labels = sampler.Sample(n, rng);
  const Matrix z = SampleLatent(n, model.arch.latent_dim, rng);
  out.data = Forward(model, z, out.labels);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::Index at = 0;
  for (const auto& block : model.arch.blocks) {
    if (block.decoder == Decoder::kSoftmax) {
      for (Eigen::Index i = 0; i < n; ++i) {
        auto row = out.data.row(i).segment(at, block.width);
        Eigen::Index pick = 0;
        if (mode == CategoricalMode::kArgmax) {
          row.maxCoeff(&pick);
        } else {
          const double u = uni(rng);
          double acc = 0.0;
          pick = block.width - 1;
          for (Eigen::Index c = 0; c < block.width; ++c) {
            acc += row[c];
            if (u < acc) {
              pick = c;
              break;
            }
          }
        }
        row.setZero();
        row[pick] = 1.0;
      }
    }
    at += block.width;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training.

enum class FeatureKernel { kHermite, kFourier };
enum class ProductRelease { kAuto, kPerEpoch, kOnce };
enum class LabelDistribution { kUniform, kEmpirical };

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  FeatureKernel kernel = FeatureKernel::kHermite;
  double gamma = 1.0;
  GammaTarget gamma_target = GammaTarget::kProduct;
  int epochs = 10;
  double batch_rate = 0.1;
  AdamOptions adam;
  // Multiplies the learning rate after every epoch.
  double lr_decay = 1.0;
  int order_sum = 25;
  int order_prod = 25;
  int prod_dims = 2;  // 0 trains on the sum kernel only
  // Length scales in normalized data units; <= 0 selects the median heuristic
  // (non-private runs only).
  double length_scale_sum = 0.0;
  double length_scale_prod = 0.0;
  SumKernelScale sum_kernel_scale = SumKernelScale::kGlobal;
  // Hermite maps see (x - feature_offset) * feature_scale.
  double feature_offset = 0.0;
  double feature_scale = 1.0;
  int64_t median_max_pairs = 100000;
  ProductRelease product_release = ProductRelease::kAuto;
  // Fourier baseline.
  int rff_features = 1000;
  double length_scale_rff = 0.0;
  // Generator.
  int latent_dim = 5;
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::kRelu;
  LabelDistribution label_distribution = LabelDistribution::kUniform;
  // Share of the sum-embedding epsilon/delta spent on class frequencies when
  // label_distribution is kEmpirical in a private run.
  double label_budget_fraction = 0.1;
  uint64_t seed = 0;
  bool is_private = false;
  PrivacyBudget budget;
};

struct RunReport {
  std::vector<double> epoch_losses;
  std::vector<std::vector<int>> product_dims_per_epoch;
  int64_t sample_count = 0;
  int64_t batch_size = 0;
  int steps_per_epoch = 0;
  int64_t sum_feature_length = 0;
  int64_t product_feature_length = 0;
  int64_t rff_feature_length = 0;
  double length_scale_sum = 0.0;
  double length_scale_prod = 0.0;
  double length_scale_rff = 0.0;
  double rho_sum = 0.0;
  double rho_prod = 0.0;
  bool is_private = false;
  EpsilonDelta sum_budget;
  EpsilonDelta product_budget;
  EpsilonDelta label_budget;
  double sigma_sum = 0.0;
  double sigma_product_per_release = 0.0;
  double sigma_rff = 0.0;
  double sigma_labels = 0.0;
  int sum_releases = 0;
  int product_releases = 0;
  std::vector<double> label_probs;
};

struct TrainResult {
  GeneratorModel model;
  LabelSampler sampler;
  RunReport report;
};

// Noise multipliers for each released statistic. Unit sensitivity; the
// per-release Delta = 2/m is attached at release time.
struct NoisePlan {
  bool enabled = false;
  NoiseCalibration sum;
  NoiseCalibration product;  // per release
  NoiseCalibration rff;
  NoiseCalibration labels;
};

namespace internal {

inline int NumProductReleases(const TrainConfig& c, int input_dim) {
  if (c.kernel != FeatureKernel::kHermite || c.prod_dims == 0) return 0;
  ProductRelease mode = c.product_release;
  if (mode == ProductRelease::kAuto) {
    mode = c.prod_dims == input_dim ? ProductRelease::kOnce
                                    : ProductRelease::kPerEpoch;
  }
  return mode == ProductRelease::kOnce ? 1 : c.epochs;
}

inline void ValidateConfig(const TrainConfig& c, int input_dim) {
  Require(c.gamma > 0.0 && std::isfinite(c.gamma), "gamma must be positive");
  Require(c.epochs >= 1, "epochs must be positive");
  Require(c.batch_rate > 0.0 && c.batch_rate <= 1.0,
          "batch rate must lie in (0, 1]");
  Require(c.adam.learning_rate > 0.0, "learning rate must be positive");
  Require(c.order_sum >= 0 && c.order_prod >= 0, "orders must be non-negative");
  Require(c.prod_dims >= 0 && c.prod_dims <= input_dim,
          "product dimension must lie in [0, D]");
  Require(c.latent_dim >= 1, "latent dimension must be positive");
  Require(c.feature_scale > 0.0 && std::isfinite(c.feature_scale),
          "feature scale must be positive");
  if (c.kernel == FeatureKernel::kFourier) {
    Require(c.rff_features >= 2 && c.rff_features % 2 == 0,
            "Fourier feature count must be even");
  }
  if (c.is_private) {
    Require(c.budget.epsilon_total > 0.0, "epsilon must be positive");
    Require(c.budget.delta_total > 0.0 && c.budget.delta_total < 1.0,
            "delta must lie in (0, 1)");
    const bool median =
        c.kernel == FeatureKernel::kHermite
            ? (c.length_scale_sum <= 0.0 ||
               (c.prod_dims > 0 && c.length_scale_prod <= 0.0))
            : c.length_scale_rff <= 0.0;
    Require(!median,
            "private training needs explicit length scales; the median "
            "heuristic reads the data");
    Require(c.label_budget_fraction > 0.0 && c.label_budget_fraction < 1.0,
            "label budget fraction must lie in (0, 1)");
  }
}

struct Adam {
  AdamOptions options;
  std::vector<Matrix> m, v;
  int64_t step = 0;

  void Update(std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
              double learning_rate) {
    if (m.empty()) {
      for (Matrix* p : params) {
        m.push_back(Matrix::Zero(p->rows(), p->cols()));
        v.push_back(Matrix::Zero(p->rows(), p->cols()));
      }
    }
    ++step;
    const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
    for (size_t i = 0; i < params.size(); ++i) {
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * grads[i];
      v[i] = options.beta2 * v[i] +
             (1.0 - options.beta2) * grads[i].cwiseProduct(grads[i]);
      const Matrix mhat = m[i] / c1;
      const Matrix vhat = v[i] / c2;
      params[i]->array() -=
          learning_rate * mhat.array() / (vhat.array().sqrt() + options.epsilon);
    }
  }
};

inline std::vector<double> EmpiricalFrequencies(std::span<const int> labels,
                                                int num_classes) {
  std::vector<double> freq(static_cast<size_t>(num_classes), 0.0);
  for (int y : labels) freq[static_cast<size_t>(y)] += 1.0;
  for (auto& f : freq) f /= static_cast<double>(labels.size());
  return freq;
}

}  // namespace internal

// Builds the release plan for `config` over a dataset of m records.
inline NoisePlan MakeNoisePlan(const TrainConfig& config, int input_dim) {
  NoisePlan plan;
  if (!config.is_private) return plan;
  plan.enabled = true;
  if (config.kernel == FeatureKernel::kFourier) {
    plan.rff = CalibrateSigma(config.budget.epsilon_total,
                              config.budget.delta_total,
                              CalibrationMethod::kAnalytic);
    return plan;
  }
  const int releases = internal::NumProductReleases(config, input_dim);
  EpsilonDelta sum_part{config.budget.epsilon_total, config.budget.delta_total};
  EpsilonDelta prod_part{0.0, 0.0};
  if (releases > 0) std::tie(sum_part, prod_part) = SplitBudget(config.budget);
  if (config.label_distribution == LabelDistribution::kEmpirical) {
    const double f = config.label_budget_fraction;
    plan.labels = CalibrateSigma(f * sum_part.epsilon, f * sum_part.delta,
                                 CalibrationMethod::kAnalytic);
    sum_part.epsilon *= 1.0 - f;
    sum_part.delta *= 1.0 - f;
  }
  plan.sum = CalibrateSigma(sum_part.epsilon, sum_part.delta,
                            CalibrationMethod::kAnalytic);
  if (releases > 0) {
    plan.product =
        ComposeProductReleases(releases, prod_part.epsilon, prod_part.delta);
  }
  return plan;
}

// Training loop with an explicit noise plan.
//
// Once: the sum (or Fourier) embedding of the full data is computed and, when
// the plan is enabled, privatized. Per product release: dimensions are
// (re)subsampled and the product embedding is computed and privatized. Per
// step: a generated batch is embedded with the same maps and the augmented
// loss is minimised with Adam.
inline TrainResult TrainWithPlan(const Matrix& data, std::span<const int> labels,
                                 int num_classes,
                                 const std::vector<OutputBlock>& blocks,
                                 const TrainConfig& config,
                                 const NoisePlan& plan) {
  const int input_dim = static_cast<int>(data.cols());
  const int64_t m = data.rows();
  Require(m >= 1, "training data is empty");
  dphp::internal::CheckLabels(labels, data.rows(), num_classes);
  internal::ValidateConfig(config, input_dim);

  GeneratorArch arch;
  arch.latent_dim = config.latent_dim;
  arch.num_classes = num_classes;
  arch.hidden = config.hidden;
  arch.activation = config.activation;
  arch.blocks = blocks;
  Require(arch.output_dim() == input_dim,
          "output blocks do not cover the data dimension");

  TrainResult result;
  RunReport& report = result.report;
  report.sample_count = m;
  report.is_private = plan.enabled;
  report.batch_size = std::max<int64_t>(
      1, std::llround(config.batch_rate * static_cast<double>(m)));
  report.steps_per_epoch =
      static_cast<int>(std::ceil(1.0 / config.batch_rate - 1e-12));

  Rng noise_rng = Substream(config.seed, "noise");
  Rng subsample_rng = Substream(config.seed, "subsample");
  Rng latent_rng = Substream(config.seed, "latent");
  Rng label_rng = Substream(config.seed, "labels");

  // Label sampler.
  if (config.label_distribution == LabelDistribution::kUniform) {
    result.sampler = LabelSampler::Uniform(num_classes);
  } else {
    std::vector<double> freq = internal::EmpiricalFrequencies(labels, num_classes);
    if (plan.enabled) {
      const double stddev =
          plan.labels.sigma * ClassFrequencySensitivity(m);
      std::normal_distribution<double> normal(0.0, stddev);
      double total = 0.0;
      for (auto& f : freq) {
        f = std::max(0.0, f + normal(noise_rng));
        total += f;
      }
      if (total <= 0.0) {
        freq.assign(freq.size(), 1.0 / num_classes);
      } else {
        for (auto& f : freq) f /= total;
      }
      report.sigma_labels = plan.labels.sigma;
      report.label_budget = {plan.labels.epsilon, plan.labels.delta};
    }
    result.sampler = LabelSampler{freq};
  }
  report.label_probs = result.sampler.probs;

  auto release = [&](LabeledMeanEmbedding emb, const NoiseCalibration& calib) {
    if (!plan.enabled) return emb;
    NoiseCalibration c = calib;
    c.sensitivity = SensitivityBound(emb.sample_count, emb.part);
    return Privatize(emb, c, noise_rng);
  };

  // Length scales and the one-shot embedding.
  auto median = [&]() {
    return MedianHeuristic(data, config.median_max_pairs, config.seed);
  };
  std::optional<SumMapSpec> sum_spec;
  std::optional<RffMapSpec> rff_spec;
  LabeledMeanEmbedding real_once;
  if (config.kernel == FeatureKernel::kHermite) {
    const double l = config.length_scale_sum > 0.0 ? config.length_scale_sum : median();
    sum_spec = MakeSumSpec(input_dim, config.order_sum, l,
                           config.sum_kernel_scale,
                           {config.feature_offset, config.feature_scale});
    report.length_scale_sum = l;
    report.rho_sum = sum_spec->bases.front().rho;
    report.sum_feature_length = FeatureLength(*sum_spec);
    real_once = release(MeanEmbedding(data, labels, *sum_spec, num_classes),
                        plan.sum);
    report.sigma_sum = plan.enabled ? plan.sum.sigma : 0.0;
    report.sum_releases = 1;
    if (plan.enabled) report.sum_budget = {plan.sum.epsilon, plan.sum.delta};
  } else {
    const double l = config.length_scale_rff > 0.0 ? config.length_scale_rff : median();
    rff_spec = MakeRffSpec(input_dim, config.rff_features, l,
                           Fnv1a("rff", config.seed));
    report.length_scale_rff = l;
    report.rff_feature_length = config.rff_features;
    real_once = release(MeanEmbedding(data, labels, *rff_spec, num_classes),
                        plan.rff);
    report.sigma_rff = plan.enabled ? plan.rff.sigma : 0.0;
    report.sum_releases = 1;
    if (plan.enabled) report.sum_budget = {plan.rff.epsilon, plan.rff.delta};
  }

  const int product_releases = internal::NumProductReleases(config, input_dim);
  double l_prod = 0.0;
  if (product_releases > 0) {
    l_prod = config.length_scale_prod > 0.0 ? config.length_scale_prod : median();
    report.length_scale_prod = l_prod;
    double rho = RhoFromLengthScale(l_prod * config.feature_scale);
    ClampRho(rho);
    report.rho_prod = rho;
    report.product_feature_length = ProductLength(config.order_prod, config.prod_dims);
    report.sigma_product_per_release = plan.enabled ? plan.product.sigma : 0.0;
    if (plan.enabled) {
      report.product_budget = {plan.product.epsilon, plan.product.delta};
    }
  }

  result.model = InitGenerator(arch, config.seed);
  GeneratorModel& model = result.model;
  internal::Adam adam{config.adam, {}, {}, 0};
  double learning_rate = config.adam.learning_rate;

  std::optional<ProductMapSpec> prod_spec;
  LabeledMeanEmbedding real_prod;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (product_releases > 0 && (epoch == 0 || product_releases > 1)) {
      std::vector<int> dims = SubsampleDims(input_dim, config.prod_dims, subsample_rng);
      prod_spec = MakeProductSpec(input_dim, config.order_prod, l_prod, dims,
                                  {config.feature_offset, config.feature_scale});
      real_prod = release(MeanEmbedding(data, labels, *prod_spec, num_classes),
                          plan.product);
      ++report.product_releases;
    }
    if (prod_spec) report.product_dims_per_epoch.push_back(prod_spec->dims);

    double epoch_loss = 0.0;
    for (int step = 0; step < report.steps_per_epoch; ++step) {
      const std::vector<int> gen_labels =
          result.sampler.Sample(report.batch_size, label_rng);
      const Matrix z = SampleLatent(report.batch_size, config.latent_dim, latent_rng);
      ad::Tape tape;
      const std::vector<ad::Var> params = ParamsAsLeaves(tape, model);
      ad::Var x = ForwardOnTape(tape, model, params, z, gen_labels);
      ad::Var loss;
      if (config.kernel == FeatureKernel::kFourier) {
        ad::Var emb = ad::EmbedByLabel(ad::RffMapLayer(x, *rff_spec), gen_labels,
                                       num_classes);
        loss = ad::FrobeniusLoss(emb, real_once.matrix);
      } else {
        ad::Var sum_emb = ad::EmbedByLabel(ad::SumMapLayer(x, *sum_spec),
                                           gen_labels, num_classes);
        loss = ad::FrobeniusLoss(sum_emb, real_once.matrix);
        if (prod_spec) {
          ad::Var prod_emb = ad::EmbedByLabel(ad::ProductMapLayer(x, *prod_spec),
                                              gen_labels, num_classes);
          ad::Var prod_loss = ad::FrobeniusLoss(prod_emb, real_prod.matrix);
          if (config.gamma_target == GammaTarget::kProduct) {
            loss = ad::Add(ad::Scale(prod_loss, config.gamma), loss);
          } else {
            loss = ad::Add(prod_loss, ad::Scale(loss, config.gamma));
          }
        }
      }
      const double value = tape.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        Fail(ErrorCode::kNumerical,
             "non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                 std::to_string(step));
      }
      tape.Backward(loss);
      std::vector<Matrix*> targets;
      std::vector<Matrix> grads;
      for (size_t l = 0; l < model.num_layers(); ++l) {
        targets.push_back(&model.weights[l]);
        targets.push_back(&model.biases[l]);
        grads.push_back(tape.grad(params[2 * l]));
        grads.push_back(tape.grad(params[2 * l + 1]));
      }
      adam.Update(targets, grads, learning_rate);
      epoch_loss += value;
    }
    report.epoch_losses.push_back(epoch_loss / report.steps_per_epoch);
    learning_rate *= config.lr_decay;
  }
  return result;
}

inline TrainResult Train(const Matrix& data, std::span<const int> labels,
                         int num_classes, const std::vector<OutputBlock>& blocks,
                         const TrainConfig& config) {
  internal::ValidateConfig(config, static_cast<int>(data.cols()));
  return TrainWithPlan(data, labels, num_classes, blocks, config,
                       MakeNoisePlan(config, static_cast<int>(data.cols())));
}

}  // namespace dphp

#endif  // DPHP_GENERATOR_HPP_
