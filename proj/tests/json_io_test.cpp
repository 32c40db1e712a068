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

#include "dphp/json_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "test_util.hpp"

namespace dphp {
namespace {

// Serializes through text so the test covers number formatting too.
Json Reparse(const Json& j) { return Json::parse(j.dump()); }

Matrix RandomMatrix(Eigen::Index r, Eigen::Index c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng) * 1e3;
  return m;
}

TEST(JsonIo, MatrixRoundTripIsExact) {
  const Matrix m = RandomMatrix(3, 4, 1);
  const Json j = MatrixToJson(m);
  EXPECT_EQ(j["data"][1], m(0, 1));
  EXPECT_EQ(MatrixFromJson(Reparse(j), "m"), m);
  EXPECT_EQ(MatrixFromJson(MatrixToJson(Matrix(0, 2)), "m").cols(), 2);
}

TEST(JsonIo, MatrixErrors) {
  EXPECT_DPHP_ERROR(kInvalidArgument,
                    MatrixFromJson(Json{{"rows", 2}, {"cols", 2}, {"data", {1, 2, 3}}}, "m"));
  EXPECT_DPHP_ERROR(kInvalidArgument,
                    MatrixFromJson(Json{{"rows", 1}, {"cols", 1}, {"data", {1}}, {"x", 0}}, "m"));
  EXPECT_DPHP_ERROR(kInvalidArgument,
                    MatrixFromJson(Json{{"rows", "1"}, {"cols", 1}, {"data", {1}}}, "m"));
  EXPECT_DPHP_ERROR(kInvalidArgument, MatrixFromJson(Json::array(), "m"));
}

TEST(JsonIo, FeatureMapRoundTrips) {
  const std::vector<FeatureMapSpec> specs{
      MakeSumSpec(3, 4, 0.7, SumKernelScale::kGlobal, {0.5, 2.0}),
      MakeProductSpec(3, 5, 0.4, {0, 2}, {0.1, 3.0}),
      CombinedMapSpec{MakeProductSpec(3, 3, 0.6, {0, 1}), MakeSumSpec(3, 4, 0.9)},
      MakeRffSpec(2, 8, 0.3, 42)};
  const Matrix x = RandomMatrix(5, 3, 2) / 1e3;
  for (const auto& spec : specs) {
    const FeatureMapSpec back = FeatureMapFromJson(Reparse(ToJson(spec)));
    EXPECT_EQ(ToJson(back).dump(), ToJson(spec).dump());
    EXPECT_EQ(Fingerprint(back), Fingerprint(spec));
    const Matrix xs = x.leftCols(InputDim(spec));
    EXPECT_EQ(FeatureMatrix(xs, back), FeatureMatrix(xs, spec));
  }
}

TEST(JsonIo, FeatureMapErrors) {
  EXPECT_DPHP_ERROR(kInvalidArgument, FeatureMapFromJson(Json{{"type", "wavelet"}}));
  Json j = ToJson(FeatureMapSpec(MakeSumSpec(2, 3, 0.5)));
  j["extra"] = 1;
  EXPECT_DPHP_ERROR(kInvalidArgument, FeatureMapFromJson(j));
  j = ToJson(FeatureMapSpec(MakeSumSpec(2, 3, 0.5)));
  j["bases"][0]["rho"] = 1.5;
  EXPECT_ANY_THROW(FeatureMapFromJson(j));
}

TEST(JsonIo, SchemaRoundTrip) {
  TabularSchema s;
  s.columns = {{"a", ColumnKind::kNumeric, -1, 2, 0, 0.5},
               {"b", ColumnKind::kOrdinal, 0, 1, 4, 0},
               {"c", ColumnKind::kCategorical, 0, 1, 2, 0}};
  s.label = "c";
  const TabularSchema back = SchemaFromJson(Reparse(ToJson(s)));
  EXPECT_EQ(ToJson(back), ToJson(s));
  ASSERT_TRUE(back.label.has_value());
  EXPECT_EQ(*back.label, "c");
  s.label.reset();
  EXPECT_FALSE(SchemaFromJson(ToJson(s)).label.has_value());
}

TEST(JsonIo, SchemaRejectsUnknownKeys) {
  Json j{{"columns", {{{"name", "a"}, {"kind", "categorical"}, {"cardinality", 3},
                       {"min", 0}}}}};
  EXPECT_DPHP_ERROR(kInvalidArgument, SchemaFromJson(j));
  j = Json{{"columns", {{{"name", "a"}, {"kind", "bogus"}, {"cardinality", 3}}}}};
  EXPECT_DPHP_ERROR(kInvalidArgument, SchemaFromJson(j));
}

TEST(JsonIo, ModelRoundTripIsExact) {
  GeneratorArch arch;
  arch.latent_dim = 2;
  arch.num_classes = 3;
  arch.hidden = {4};
  arch.activation = Activation::kTanh;
  arch.blocks = {{Decoder::kSigmoid, 1}, {Decoder::kSoftmax, 2}};
  GeneratorModel m = InitGenerator(arch, 3);
  m.biases[0] = RandomMatrix(1, 4, 4);
  const GeneratorModel back = ModelFromJson(Reparse(ToJson(m)));
  EXPECT_EQ(back.arch.activation, Activation::kTanh);
  EXPECT_EQ(back.arch.blocks.size(), 2u);
  for (size_t l = 0; l < m.num_layers(); ++l) {
    EXPECT_EQ(back.weights[l], m.weights[l]);
    EXPECT_EQ(back.biases[l], m.biases[l]);
  }
  Json bad = ToJson(m);
  bad["hidden"] = {5};
  EXPECT_DPHP_ERROR(kInvalidArgument, ModelFromJson(bad));
}

TEST(JsonIo, ScalerRoundTrip) {
  const MinMaxScaler s{(Vector(2) << -1, 0.25).finished(), (Vector(2) << 5, 0.5).finished()};
  const MinMaxScaler back = ScalerFromJson(Reparse(ToJson(s)));
  EXPECT_EQ(back.lo, s.lo);
  EXPECT_EQ(back.hi, s.hi);
  EXPECT_DPHP_ERROR(kInvalidArgument, ScalerFromJson(Json{{"lo", {1}}, {"hi", {0}}}));
}

TEST(JsonIo, TrainConfigRoundTrip) {
  TrainConfig c;
  c.kernel = FeatureKernel::kFourier;
  c.gamma = 2.5;
  c.gamma_target = GammaTarget::kSum;
  c.hidden = {7, 9};
  c.product_release = ProductRelease::kPerEpoch;
  c.label_distribution = LabelDistribution::kEmpirical;
  const Json j = Reparse(ToJson(c));
  TrainConfig back;
  ObjectReader r(j, "train");
  ReadTrainConfig(r, back);
  EXPECT_NO_THROW(r.Finish());
  EXPECT_EQ(ToJson(back), ToJson(c));
}

TEST(JsonIo, ReaderReportsUnknownKeysWithPath) {
  const Json j{{"known", 1}, {"typo", 2}};
  ObjectReader r(j, "train");
  EXPECT_EQ(r.Get<int>("known"), 1);
  try {
    r.Finish();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("train.typo"), std::string::npos);
  }
  ObjectReader r2(j, "x");
  EXPECT_DPHP_ERROR(kInvalidArgument, r2.Get<int>("missing"));
  EXPECT_DPHP_ERROR(kInvalidArgument, r2.Get<std::string>("known"));
  EXPECT_EQ(r2.Get<int>("absent", 7), 7);
}

TEST(JsonIo, FileHelpers) {
  const auto dir = std::filesystem::temp_directory_path() / "dphp_json_io_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "a.json").string();
  const Json j{{"k", {1, 2}}};
  WriteJsonFile(path, j);
  EXPECT_EQ(ReadJsonFile(path), j);
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_DPHP_ERROR(kInvalidArgument, ReadJsonFile(path));
  EXPECT_DPHP_ERROR(kInvalidArgument, ReadJsonFile((dir / "missing.json").string()));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dphp
