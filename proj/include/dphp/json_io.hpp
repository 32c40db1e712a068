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

// JSON forms of specs, models, schemas and reports, plus a strict object
// reader that rejects unknown keys.

#ifndef DPHP_JSON_IO_HPP_
#define DPHP_JSON_IO_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dphp/dataeval.hpp"
#include "dphp/embedding.hpp"
#include "dphp/error.hpp"
#include "dphp/featuremaps.hpp"
#include "dphp/generator.hpp"
#include "dphp/privacy.hpp"

namespace dphp {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Strict reading.

// Reads fields of one JSON object and reports keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) {
      Fail(ErrorCode::kInvalidArgument, where_ + " must be a JSON object");
    }
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& At(const std::string& key) {
    if (!Has(key)) Fail(ErrorCode::kInvalidArgument, "missing key " + Path(key));
    return j_.at(key);
  }

  template <typename T>
  T Get(const std::string& key) {
    return Convert<T>(At(key), key);
  }

  template <typename T>
  T Get(const std::string& key, const T& fallback) {
    if (!Has(key)) return fallback;
    return Convert<T>(j_.at(key), key);
  }

  template <typename T>
  void Read(const std::string& key, T& target) {
    if (Has(key)) target = Convert<T>(j_.at(key), key);
  }

  ObjectReader Child(const std::string& key) { return ObjectReader(At(key), Path(key)); }

  std::string Path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  // Throws if the object holds keys that were never read.
  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        Fail(ErrorCode::kInvalidArgument, "unknown key " + Path(it.key()));
      }
    }
  }

 private:
  template <typename T>
  T Convert(const Json& v, const std::string& key) const {
    try {
      return v.get<T>();
    } catch (const nlohmann::json::exception&) {
      Fail(ErrorCode::kInvalidArgument, "key " + Path(key) + " has the wrong type");
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kInvalidArgument, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kInvalidArgument, "cannot parse " + path + ": " + e.what());
  }
}

inline void WriteJsonFile(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Enumerations.

namespace internal {

template <typename E, size_t N>
const char* EnumName(E value, const std::pair<E, const char*> (&table)[N]) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

template <typename E, size_t N>
E EnumFromName(const std::string& name, const std::pair<E, const char*> (&table)[N],
               const char* what) {
  for (const auto& [v, n] : table) {
    if (name == n) return v;
  }
  Fail(ErrorCode::kInvalidArgument, std::string("unknown ") + what + ": " + name);
}

inline constexpr std::pair<Activation, const char*> kActivationNames[] = {
    {Activation::kRelu, "relu"}, {Activation::kTanh, "tanh"}};
inline constexpr std::pair<Decoder, const char*> kDecoderNames[] = {
    {Decoder::kIdentity, "identity"},
    {Decoder::kSigmoid, "sigmoid"},
    {Decoder::kSoftmax, "softmax"}};
inline constexpr std::pair<FeatureKernel, const char*> kKernelNames[] = {
    {FeatureKernel::kHermite, "hermite"}, {FeatureKernel::kFourier, "fourier"}};
inline constexpr std::pair<ProductRelease, const char*> kReleaseNames[] = {
    {ProductRelease::kAuto, "auto"},
    {ProductRelease::kPerEpoch, "per_epoch"},
    {ProductRelease::kOnce, "once"}};
inline constexpr std::pair<LabelDistribution, const char*> kLabelDistNames[] = {
    {LabelDistribution::kUniform, "uniform"},
    {LabelDistribution::kEmpirical, "empirical"}};
inline constexpr std::pair<GammaTarget, const char*> kGammaTargetNames[] = {
    {GammaTarget::kProduct, "product"}, {GammaTarget::kSum, "sum"}};
inline constexpr std::pair<SumKernelScale, const char*> kSumScaleNames[] = {
    {SumKernelScale::kGlobal, "global"}, {SumKernelScale::kAmGm, "am_gm"}};
inline constexpr std::pair<ColumnKind, const char*> kColumnKindNames[] = {
    {ColumnKind::kNumeric, "numeric"},
    {ColumnKind::kCategorical, "categorical"},
    {ColumnKind::kOrdinal, "ordinal"}};

}  // namespace internal

#define DPHP_ENUM_NAMES(Type, table, what)                               \
  inline const char* Name(Type v) { return internal::EnumName(v, table); } \
  inline Type Parse##Type(const std::string& s) {                         \
    return internal::EnumFromName(s, table, what);                        \
  }

DPHP_ENUM_NAMES(Activation, internal::kActivationNames, "activation")
DPHP_ENUM_NAMES(Decoder, internal::kDecoderNames, "decoder")
DPHP_ENUM_NAMES(FeatureKernel, internal::kKernelNames, "feature kernel")
DPHP_ENUM_NAMES(ProductRelease, internal::kReleaseNames, "product release mode")
DPHP_ENUM_NAMES(LabelDistribution, internal::kLabelDistNames, "label distribution")
DPHP_ENUM_NAMES(GammaTarget, internal::kGammaTargetNames, "gamma target")
DPHP_ENUM_NAMES(SumKernelScale, internal::kSumScaleNames, "sum kernel scale")
DPHP_ENUM_NAMES(ColumnKind, internal::kColumnKindNames, "column kind")

#undef DPHP_ENUM_NAMES

// ---------------------------------------------------------------------------
// Matrices.

// Row-major {"rows", "cols", "data"}.
inline Json MatrixToJson(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix MatrixFromJson(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  const auto rows = r.Get<Eigen::Index>("rows");
  const auto cols = r.Get<Eigen::Index>("cols");
  const auto data = r.Get<std::vector<double>>("data");
  r.Finish();
  Require(rows >= 0 && cols >= 0 && static_cast<Eigen::Index>(data.size()) == rows * cols,
          where + ": data length does not match rows * cols");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = data[static_cast<size_t>(i * cols + k)];
    }
  }
  return m;
}

inline Json VectorToJson(const Vector& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector VectorFromJson(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// ---------------------------------------------------------------------------
// Feature maps and embeddings.

inline Json ToJson(const HermiteBasis& b) {
  return Json{{"rho", b.rho}, {"order", b.order}};
}

inline Json ToJson(const FeatureMapSpec& spec) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SumMapSpec>) {
          Json bases = Json::array();
          for (const auto& b : s.bases) bases.push_back(ToJson(b));
          return Json{{"type", "sum"},       {"input_dim", s.input_dim},
                      {"bases", bases},      {"offset", s.offset},
                      {"scale", s.scale}};
        } else if constexpr (std::is_same_v<T, ProductMapSpec>) {
          return Json{{"type", "product"},   {"input_dim", s.input_dim},
                      {"basis", ToJson(s.basis)}, {"dims", s.dims},
                      {"offset", s.offset},  {"scale", s.scale},
                      {"size_cap", s.size_cap}};
        } else if constexpr (std::is_same_v<T, CombinedMapSpec>) {
          return Json{{"type", "combined"},
                      {"product", ToJson(FeatureMapSpec(s.product))},
                      {"sum", ToJson(FeatureMapSpec(s.sum))}};
        } else {
          return Json{{"type", "fourier"},
                      {"input_dim", s.input_dim},
                      {"num_features", s.num_features},
                      {"length_scale", s.length_scale},
                      {"seed", s.seed},
                      {"omega", MatrixToJson(s.omega)}};
        }
      },
      spec);
}

inline HermiteBasis BasisFromJson(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  HermiteBasis b(r.Get<double>("rho"), r.Get<int>("order"));
  r.Finish();
  return b;
}

inline FeatureMapSpec FeatureMapFromJson(const Json& j, const std::string& where = "map") {
  ObjectReader r(j, where);
  const auto type = r.Get<std::string>("type");
  FeatureMapSpec out;
  if (type == "sum") {
    SumMapSpec s;
    s.input_dim = r.Get<int>("input_dim");
    for (const auto& b : r.At("bases")) s.bases.push_back(BasisFromJson(b, r.Path("bases")));
    r.Read("offset", s.offset);
    r.Read("scale", s.scale);
    out = s;
  } else if (type == "product") {
    ProductMapSpec s;
    s.input_dim = r.Get<int>("input_dim");
    s.basis = BasisFromJson(r.At("basis"), r.Path("basis"));
    s.dims = r.Get<std::vector<int>>("dims");
    r.Read("offset", s.offset);
    r.Read("scale", s.scale);
    r.Read("size_cap", s.size_cap);
    out = s;
  } else if (type == "combined") {
    CombinedMapSpec s;
    s.product = std::get<ProductMapSpec>(FeatureMapFromJson(r.At("product"), r.Path("product")));
    s.sum = std::get<SumMapSpec>(FeatureMapFromJson(r.At("sum"), r.Path("sum")));
    out = s;
  } else if (type == "fourier") {
    RffMapSpec s;
    s.input_dim = r.Get<int>("input_dim");
    s.num_features = r.Get<int>("num_features");
    s.length_scale = r.Get<double>("length_scale");
    s.seed = r.Get<uint64_t>("seed");
    s.omega = MatrixFromJson(r.At("omega"), r.Path("omega"));
    out = s;
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown feature map type: " + type);
  }
  r.Finish();
  Validate(out);
  return out;
}

inline Json ToJson(const LabeledMeanEmbedding& e) {
  return Json{{"part", PartTagName(e.part)},
              {"sample_count", e.sample_count},
              {"fingerprint", e.fingerprint},
              {"privatized", e.privatized},
              {"noise_sigma", e.noise_sigma},
              {"noise_sensitivity", e.noise_sensitivity},
              {"matrix", MatrixToJson(e.matrix)}};
}

inline Json ToJson(const NoiseCalibration& c) {
  return Json{{"sigma", c.sigma},
              {"sensitivity", c.sensitivity},
              {"noise_stddev", c.noise_stddev()},
              {"epsilon", c.epsilon},
              {"delta", c.delta},
              {"method", CalibrationMethodName(c.method)}};
}

// ---------------------------------------------------------------------------
// Schemas and scalers.

inline Json ToJson(const TabularSchema& schema) {
  Json cols = Json::array();
  for (const auto& c : schema.columns) {
    Json col{{"name", c.name}, {"kind", Name(c.kind)}};
    if (c.discrete()) {
      col["cardinality"] = c.cardinality;
    } else {
      col["min"] = c.min;
      col["max"] = c.max;
      if (c.precision > 0.0) col["precision"] = c.precision;
    }
    cols.push_back(std::move(col));
  }
  Json j{{"columns", std::move(cols)}};
  j["label"] = schema.label ? Json(*schema.label) : Json(nullptr);
  return j;
}

inline TabularSchema SchemaFromJson(const Json& j, const std::string& where = "schema") {
  ObjectReader r(j, where);
  TabularSchema schema;
  for (const auto& cj : r.At("columns")) {
    ObjectReader c(cj, r.Path("columns"));
    ColumnSpec col;
    col.name = c.Get<std::string>("name");
    col.kind = ParseColumnKind(c.Get<std::string>("kind"));
    if (col.discrete()) {
      col.cardinality = c.Get<int>("cardinality");
    } else {
      col.min = c.Get<double>("min");
      col.max = c.Get<double>("max");
      c.Read("precision", col.precision);
    }
    c.Finish();
    schema.columns.push_back(std::move(col));
  }
  if (r.Has("label") && !j.at("label").is_null()) {
    schema.label = r.Get<std::string>("label");
  }
  r.Finish();
  schema.Validate();
  return schema;
}

inline Json ToJson(const MinMaxScaler& s) {
  return Json{{"lo", VectorToJson(s.lo)}, {"hi", VectorToJson(s.hi)}};
}

inline MinMaxScaler ScalerFromJson(const Json& j, const std::string& where = "scaler") {
  ObjectReader r(j, where);
  MinMaxScaler s{VectorFromJson(r.At("lo")), VectorFromJson(r.At("hi"))};
  r.Finish();
  Require(s.lo.size() == s.hi.size(), where + ": lo and hi differ in length");
  for (Eigen::Index d = 0; d < s.lo.size(); ++d) {
    Require(s.hi[d] > s.lo[d], where + ": hi must exceed lo");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Generator models.

inline Json ToJson(const GeneratorModel& model) {
  const auto& a = model.arch;
  Json blocks = Json::array();
  for (const auto& b : a.blocks) {
    blocks.push_back(Json{{"decoder", Name(b.decoder)}, {"width", b.width}});
  }
  Json weights = Json::array(), biases = Json::array();
  for (size_t l = 0; l < model.num_layers(); ++l) {
    weights.push_back(MatrixToJson(model.weights[l]));
    biases.push_back(MatrixToJson(model.biases[l]));
  }
  return Json{{"latent_dim", a.latent_dim},
              {"num_classes", a.num_classes},
              {"hidden", a.hidden},
              {"activation", Name(a.activation)},
              {"blocks", std::move(blocks)},
              {"init_seed", model.seed},
              {"weights", std::move(weights)},
              {"biases", std::move(biases)}};
}

inline GeneratorModel ModelFromJson(const Json& j, const std::string& where = "model") {
  ObjectReader r(j, where);
  GeneratorModel model;
  auto& a = model.arch;
  a.latent_dim = r.Get<int>("latent_dim");
  a.num_classes = r.Get<int>("num_classes");
  a.hidden = r.Get<std::vector<int>>("hidden");
  a.activation = ParseActivation(r.Get<std::string>("activation"));
  for (const auto& bj : r.At("blocks")) {
    ObjectReader b(bj, r.Path("blocks"));
    a.blocks.push_back(OutputBlock{ParseDecoder(b.Get<std::string>("decoder")),
                                   b.Get<int>("width")});
    b.Finish();
  }
  model.seed = r.Get<uint64_t>("init_seed");
  for (const auto& w : r.At("weights")) {
    model.weights.push_back(MatrixFromJson(w, r.Path("weights")));
  }
  for (const auto& b : r.At("biases")) {
    model.biases.push_back(MatrixFromJson(b, r.Path("biases")));
  }
  r.Finish();
  Validate(a);
  std::vector<int> widths{a.latent_dim + a.num_classes};
  widths.insert(widths.end(), a.hidden.begin(), a.hidden.end());
  widths.push_back(a.output_dim());
  Require(model.weights.size() + 1 == widths.size() &&
              model.biases.size() == model.weights.size(),
          where + ": layer count does not match the architecture");
  for (size_t l = 0; l < model.weights.size(); ++l) {
    Require(model.weights[l].rows() == widths[l] && model.weights[l].cols() == widths[l + 1] &&
                model.biases[l].rows() == 1 && model.biases[l].cols() == widths[l + 1],
            where + ": layer " + std::to_string(l) + " has the wrong shape");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training configuration and run reports.

inline Json ToJson(const TrainConfig& c) {
  return Json{{"kernel", Name(c.kernel)},
              {"gamma", c.gamma},
              {"gamma_target", Name(c.gamma_target)},
              {"epochs", c.epochs},
              {"batch_rate", c.batch_rate},
              {"learning_rate", c.adam.learning_rate},
              {"adam_beta1", c.adam.beta1},
              {"adam_beta2", c.adam.beta2},
              {"adam_epsilon", c.adam.epsilon},
              {"lr_decay", c.lr_decay},
              {"order_sum", c.order_sum},
              {"order_prod", c.order_prod},
              {"prod_dims", c.prod_dims},
              {"length_scale_sum", c.length_scale_sum},
              {"length_scale_prod", c.length_scale_prod},
              {"sum_kernel_scale", Name(c.sum_kernel_scale)},
              {"feature_offset", c.feature_offset},
              {"feature_scale", c.feature_scale},
              {"median_max_pairs", c.median_max_pairs},
              {"product_release", Name(c.product_release)},
              {"rff_features", c.rff_features},
              {"length_scale_rff", c.length_scale_rff},
              {"latent_dim", c.latent_dim},
              {"hidden", c.hidden},
              {"activation", Name(c.activation)},
              {"label_distribution", Name(c.label_distribution)},
              {"label_budget_fraction", c.label_budget_fraction}};
}

// Reads the keys of ToJson(TrainConfig) into `c`; absent keys keep their
// current values.
inline void ReadTrainConfig(ObjectReader& r, TrainConfig& c) {
  if (r.Has("kernel")) c.kernel = ParseFeatureKernel(r.Get<std::string>("kernel"));
  r.Read("gamma", c.gamma);
  if (r.Has("gamma_target")) {
    c.gamma_target = ParseGammaTarget(r.Get<std::string>("gamma_target"));
  }
  r.Read("epochs", c.epochs);
  r.Read("batch_rate", c.batch_rate);
  r.Read("learning_rate", c.adam.learning_rate);
  r.Read("adam_beta1", c.adam.beta1);
  r.Read("adam_beta2", c.adam.beta2);
  r.Read("adam_epsilon", c.adam.epsilon);
  r.Read("lr_decay", c.lr_decay);
  r.Read("order_sum", c.order_sum);
  r.Read("order_prod", c.order_prod);
  r.Read("prod_dims", c.prod_dims);
  r.Read("length_scale_sum", c.length_scale_sum);
  r.Read("length_scale_prod", c.length_scale_prod);
  if (r.Has("sum_kernel_scale")) {
    c.sum_kernel_scale = ParseSumKernelScale(r.Get<std::string>("sum_kernel_scale"));
  }
  r.Read("feature_offset", c.feature_offset);
  r.Read("feature_scale", c.feature_scale);
  r.Read("median_max_pairs", c.median_max_pairs);
  if (r.Has("product_release")) {
    c.product_release = ParseProductRelease(r.Get<std::string>("product_release"));
  }
  r.Read("rff_features", c.rff_features);
  r.Read("length_scale_rff", c.length_scale_rff);
  r.Read("latent_dim", c.latent_dim);
  r.Read("hidden", c.hidden);
  if (r.Has("activation")) c.activation = ParseActivation(r.Get<std::string>("activation"));
  if (r.Has("label_distribution")) {
    c.label_distribution = ParseLabelDistribution(r.Get<std::string>("label_distribution"));
  }
  r.Read("label_budget_fraction", c.label_budget_fraction);
}

inline Json ToJson(const EpsilonDelta& b) {
  return Json{{"epsilon", b.epsilon}, {"delta", b.delta}};
}

inline Json ToJson(const RunReport& r) {
  Json privacy{{"private", r.is_private},
               {"sum_budget", ToJson(r.sum_budget)},
               {"product_budget", ToJson(r.product_budget)},
               {"label_budget", ToJson(r.label_budget)},
               {"sigma_sum", r.sigma_sum},
               {"sigma_product_per_release", r.sigma_product_per_release},
               {"sigma_rff", r.sigma_rff},
               {"sigma_labels", r.sigma_labels},
               {"sum_releases", r.sum_releases},
               {"product_releases", r.product_releases}};
  return Json{{"sample_count", r.sample_count},
              {"batch_size", r.batch_size},
              {"steps_per_epoch", r.steps_per_epoch},
              {"sum_feature_length", r.sum_feature_length},
              {"product_feature_length", r.product_feature_length},
              {"rff_feature_length", r.rff_feature_length},
              {"length_scale_sum", r.length_scale_sum},
              {"length_scale_prod", r.length_scale_prod},
              {"length_scale_rff", r.length_scale_rff},
              {"rho_sum", r.rho_sum},
              {"rho_prod", r.rho_prod},
              {"privacy", std::move(privacy)},
              {"label_probs", r.label_probs},
              {"product_dims_per_epoch", r.product_dims_per_epoch},
              {"epoch_losses", r.epoch_losses}};
}

}  // namespace dphp

#endif  // DPHP_JSON_IO_HPP_
