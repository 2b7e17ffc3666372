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

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"

// Low-rank adaptation algebra at desk scale. A frozen weight W (d x k) is
// adapted by a rank-r update delta = scale * B A with B (d x r) and
// A (r x k). The adapted layer can be applied either through the merged
// matrix W + delta or through the factored path W x + scale * B (A x); the
// two agree up to rounding.
namespace emrgen::lora {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  /// Zero-filled. Throws std::invalid_argument on a zero dimension.
  Matrix(std::size_t rows, std::size_t cols);
  /// Throws DimensionMismatch when data.size() != rows * cols and
  /// std::invalid_argument on non-finite entries.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Nested rows, e.g. {{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> data() const noexcept { return data_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& m, double factor);
std::vector<double> multiply(const Matrix& m, std::span<const double> x);

/// Largest absolute entry of a - b; the inputs must have equal length.
double max_abs_diff(std::span<const double> a, std::span<const double> b);

struct LoraAdapter {
  Matrix a;  // r x k
  Matrix b;  // d x r
  std::size_t rank = 0;
  double scale = 1.0;

  std::size_t out_dim() const noexcept { return b.rows(); }
  std::size_t in_dim() const noexcept { return a.cols(); }
  /// r * (d + k), against d * k for a dense update.
  std::size_t parameter_count() const noexcept { return rank * (out_dim() + in_dim()); }

  /// Throws DimensionMismatch unless a.rows == b.cols == rank and
  /// rank <= min(d, k).
  void validate() const;
};

/// Adapter with rank inferred from the factor shapes.
LoraAdapter make_adapter(Matrix a, Matrix b, double scale = 1.0);

/// scale * B A, d x k.
Matrix lora_delta(const LoraAdapter& adapter);
/// W + scale * B A.
Matrix lora_merge(const Matrix& w, const LoraAdapter& adapter);
/// W x + scale * B (A x) without forming B A.
std::vector<double> lora_forward(std::span<const double> x, const Matrix& w, const LoraAdapter& adapter);

/// Numerical rank by row reduction with partial pivoting; pivots with
/// magnitude below `tol` count as zero. Throws std::invalid_argument for
/// tol <= 0.
std::size_t matrix_rank(const Matrix& m, double tol);

// {"r": int, "A": [[...]], "B": [[...]], "scale": real (optional)}
nlohmann::json adapter_to_json(const LoraAdapter& adapter);
LoraAdapter adapter_from_json(const nlohmann::json& json);
LoraAdapter load_adapter(const std::filesystem::path& path);

}  // namespace emrgen::lora
