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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace emrgen::lora {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("matrix dimensions must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("matrix dimensions must be positive");
  if (data_.size() != rows * cols) {
    throw DimensionMismatch("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                            std::to_string(rows * cols));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw std::invalid_argument("matrix entries must be finite");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("matrix dimensions must be positive");
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw DimensionMismatch("ragged matrix literal");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("cannot multiply " + shape(a) + " by " + shape(b));
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double lhs = a(i, p);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += lhs * b(p, j);
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("cannot add " + shape(a) + " and " + shape(b));
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) += b(i, j);
  }
  return out;
}

Matrix scaled(const Matrix& m, double factor) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) *= factor;
  }
  return out;
}

std::vector<double> multiply(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) {
    throw DimensionMismatch("cannot apply " + shape(m) + " to a vector of length " + std::to_string(x.size()));
  }
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("length mismatch in max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void LoraAdapter::validate() const {
  if (a.rows() != b.cols()) {
    throw DimensionMismatch("adapter factors disagree on rank: A is " + shape(a) + ", B is " + shape(b));
  }
  if (a.rows() != rank) {
    throw DimensionMismatch("adapter rank " + std::to_string(rank) + " does not match A (" + shape(a) + ")");
  }
  if (rank == 0 || rank > std::min(out_dim(), in_dim())) {
    throw DimensionMismatch("adapter rank " + std::to_string(rank) + " outside [1, min(d, k)]");
  }
}

LoraAdapter make_adapter(Matrix a, Matrix b, double scale) {
  LoraAdapter adapter{std::move(a), std::move(b), 0, scale};
  adapter.rank = adapter.a.rows();
  adapter.validate();
  return adapter;
}

Matrix lora_delta(const LoraAdapter& adapter) {
  adapter.validate();
  auto delta = multiply(adapter.b, adapter.a);
  return adapter.scale == 1.0 ? delta : scaled(delta, adapter.scale);
}

Matrix lora_merge(const Matrix& w, const LoraAdapter& adapter) {
  adapter.validate();
  if (w.rows() != adapter.out_dim() || w.cols() != adapter.in_dim()) {
    throw DimensionMismatch("weight " + shape(w) + " does not match adapter update " +
                            std::to_string(adapter.out_dim()) + "x" + std::to_string(adapter.in_dim()));
  }
  return add(w, lora_delta(adapter));
}

std::vector<double> lora_forward(std::span<const double> x, const Matrix& w, const LoraAdapter& adapter) {
  adapter.validate();
  if (w.rows() != adapter.out_dim() || w.cols() != adapter.in_dim()) {
    throw DimensionMismatch("weight " + shape(w) + " does not match adapter");
  }
  auto y = multiply(w, x);
  const auto ax = multiply(adapter.a, x);
  const auto bax = multiply(adapter.b, ax);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += adapter.scale * bax[i];
  return y;
}

std::size_t matrix_rank(const Matrix& m, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("rank tolerance must be positive");
  Matrix work = m;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < work.cols() && rank < work.rows(); ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < work.rows(); ++r) {
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    }
    if (std::abs(work(pivot, col)) < tol) continue;
    if (pivot != rank) {
      for (std::size_t c = 0; c < work.cols(); ++c) std::swap(work(pivot, c), work(rank, c));
    }
    for (std::size_t r = rank + 1; r < work.rows(); ++r) {
      const double factor = work(r, col) / work(rank, col);
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < work.cols(); ++c) work(r, c) -= factor * work(rank, c);
    }
    ++rank;
  }
  return rank;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& json, const char* name) {
  if (!json.is_array() || json.empty() || !json[0].is_array()) {
    throw std::invalid_argument(std::string("adapter field ") + name + " must be a non-empty array of rows");
  }
  const auto rows = json.size();
  const auto cols = json[0].size();
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& row : json) {
    if (!row.is_array() || row.size() != cols) throw DimensionMismatch(std::string("ragged rows in ") + name);
    for (const auto& v : row) {
      if (!v.is_number()) throw std::invalid_argument(std::string("non-numeric entry in ") + name);
      data.push_back(v.get<double>());
    }
  }
  return Matrix(rows, cols, std::move(data));
}

}  // namespace

nlohmann::json adapter_to_json(const LoraAdapter& adapter) {
  nlohmann::json out{{"r", adapter.rank}, {"A", matrix_to_json(adapter.a)}, {"B", matrix_to_json(adapter.b)}};
  if (adapter.scale != 1.0) out["scale"] = adapter.scale;
  return out;
}

LoraAdapter adapter_from_json(const nlohmann::json& json) {
  if (!json.is_object() || !json.contains("r") || !json["r"].is_number_integer() || json["r"].get<long long>() < 0) {
    throw std::invalid_argument("adapter JSON needs a non-negative integer \"r\"");
  }
  LoraAdapter adapter{matrix_from_json(json.value("A", nlohmann::json()), "A"),
                      matrix_from_json(json.value("B", nlohmann::json()), "B"),
                      json["r"].get<std::size_t>(), json.value("scale", 1.0)};
  adapter.validate();
  return adapter;
}

LoraAdapter load_adapter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open adapter file " + path.string());
  return adapter_from_json(nlohmann::json::parse(in));
}

}  // namespace emrgen::lora
