// Copyright 2026 The emrgen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "emrgen/lora.hpp"

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace emrgen::lora {
namespace {

Matrix random_matrix(testing::Gen& gen, std::size_t rows, std::size_t cols) {
  std::vector<double> data(rows * cols);
  for (auto& x : data) x = gen.uniform(-1.0, 1.0);
  return Matrix(rows, cols, std::move(data));
}

TEST(MatrixTest, ConstructionChecks) {
  EXPECT_THROW(Matrix(0, 2), std::invalid_argument);
  EXPECT_THROW(Matrix(2, 2, {1, 2, 3}), DimensionMismatch);
  EXPECT_THROW(Matrix(1, 1, {std::nan("")}), std::invalid_argument);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), DimensionMismatch);
  const Matrix m{{1, 2}, {3, 4}};
  EXPECT_EQ(m(1, 0), 3.0);
  EXPECT_EQ(Matrix::identity(2), (Matrix{{1, 0}, {0, 1}}));
}

TEST(MatrixTest, MultiplyHandExample) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5, 6}, {7, 8}};
  EXPECT_EQ(multiply(a, b), (Matrix{{19, 22}, {43, 50}}));
  const std::vector<double> x{1, -1};
  EXPECT_EQ(multiply(a, std::span<const double>(x)), (std::vector<double>{-1, -1}));
  EXPECT_THROW(multiply(a, Matrix(3, 1)), DimensionMismatch);
  EXPECT_THROW(add(a, Matrix(1, 2)), DimensionMismatch);
}

TEST(LoraTest, TwoByTwoWorkedExample) {
  // B = [1; 0], A = [0 1]  =>  BA = [[0, 1], [0, 0]],  I + BA = [[1, 1], [0, 1]]
  const auto adapter = make_adapter(Matrix{{0, 1}}, Matrix{{1}, {0}});
  EXPECT_EQ(adapter.rank, 1u);
  EXPECT_EQ(lora_delta(adapter), (Matrix{{0, 1}, {0, 0}}));
  EXPECT_EQ(lora_merge(Matrix::identity(2), adapter), (Matrix{{1, 1}, {0, 1}}));
  const std::vector<double> x{2, 3};
  EXPECT_EQ(lora_forward(x, Matrix::identity(2), adapter), (std::vector<double>{5, 3}));
  EXPECT_EQ(matrix_rank(lora_delta(adapter), 1e-9), 1u);
}

TEST(LoraTest, ParameterCount) {
  testing::Gen gen(1);
  const auto adapter = make_adapter(random_matrix(gen, 4, 64), random_matrix(gen, 32, 4));
  EXPECT_EQ(adapter.parameter_count(), 4u * (32u + 64u));
  EXPECT_LT(adapter.parameter_count(), 32u * 64u);
}

TEST(LoraTest, ValidateRejectsBadShapes) {
  testing::Gen gen(2);
  // inner dimensions disagree
  EXPECT_THROW(make_adapter(random_matrix(gen, 2, 3), random_matrix(gen, 3, 3)), DimensionMismatch);
  // rank above min(d, k)
  EXPECT_THROW(make_adapter(random_matrix(gen, 3, 2), random_matrix(gen, 4, 3)), DimensionMismatch);
  const auto ok = make_adapter(random_matrix(gen, 2, 3), random_matrix(gen, 4, 2));
  EXPECT_THROW(lora_merge(Matrix(3, 3), ok), DimensionMismatch);
  const std::vector<double> x(2);
  EXPECT_THROW(lora_forward(x, Matrix(4, 3), ok), DimensionMismatch);
}

TEST(LoraTest, FactoredAndMergedAgree) {
  testing::Gen gen(3);
  for (int i = 0; i < 300; ++i) {
    const auto d = 1 + gen.below(16);
    const auto k = 1 + gen.below(16);
    const auto r = 1 + gen.below(std::min(d, k));
    const auto w = random_matrix(gen, d, k);
    const auto adapter = make_adapter(random_matrix(gen, r, k), random_matrix(gen, d, r), gen.uniform(0.5, 2.0));
    std::vector<double> x(k);
    for (auto& v : x) v = gen.uniform(-1.0, 1.0);
    const auto merged = multiply(lora_merge(w, adapter), std::span<const double>(x));
    const auto factored = lora_forward(x, w, adapter);
    ASSERT_LE(max_abs_diff(merged, factored), 1e-9);
  }
}

TEST(LoraTest, RankBoundAgreesWithGramSchmidt) {
  testing::Gen gen(4);
  for (int i = 0; i < 200; ++i) {
    const auto d = 2 + gen.below(15);
    const auto k = 2 + gen.below(15);
    const auto r = 1 + gen.below(std::min(d, k));
    const auto delta = lora_delta(make_adapter(random_matrix(gen, r, k), random_matrix(gen, d, r)));
    const auto rank = matrix_rank(delta, 1e-9);
    ASSERT_LE(rank, r);
    const std::vector<double> data(delta.data().begin(), delta.data().end());
    ASSERT_EQ(rank, testing::gram_schmidt_rank(data, d, k, 1e-9));
  }
}

TEST(LoraTest, ZeroAIsExactIdentityUpdate) {
  testing::Gen gen(5);
  const auto w = random_matrix(gen, 5, 7);
  const auto adapter = make_adapter(Matrix(2, 7), random_matrix(gen, 5, 2));
  EXPECT_EQ(lora_merge(w, adapter), w);
  EXPECT_EQ(matrix_rank(lora_delta(adapter), 1e-9), 0u);
}

TEST(RankTest, KnownRanks) {
  EXPECT_EQ(matrix_rank(Matrix::identity(4), 1e-9), 4u);
  EXPECT_EQ(matrix_rank(Matrix(3, 5), 1e-9), 0u);
  EXPECT_EQ(matrix_rank(Matrix{{1, 2, 3}, {2, 4, 6}, {1, 0, 1}}, 1e-9), 2u);
  EXPECT_THROW(matrix_rank(Matrix::identity(2), 0.0), std::invalid_argument);
}

TEST(AdapterJsonTest, RoundTripAndValidation) {
  testing::Gen gen(6);
  const auto adapter = make_adapter(random_matrix(gen, 2, 3), random_matrix(gen, 4, 2), 0.5);
  const auto back = adapter_from_json(adapter_to_json(adapter));
  EXPECT_EQ(back.a, adapter.a);
  EXPECT_EQ(back.b, adapter.b);
  EXPECT_EQ(back.rank, 2u);
  EXPECT_EQ(back.scale, 0.5);

  auto bad = adapter_to_json(adapter);
  bad["r"] = 3;
  EXPECT_THROW(adapter_from_json(bad), DimensionMismatch);

  testing::TempDir dir;
  testing::write_file(dir / "a.json", R"({"r": 1, "A": [[0, 1]], "B": [[1], [0]]})");
  const auto loaded = load_adapter(dir / "a.json");
  EXPECT_EQ(loaded.scale, 1.0);
  EXPECT_EQ(lora_delta(loaded), (Matrix{{0, 1}, {0, 0}}));
}

}  // namespace
}  // namespace emrgen::lora
