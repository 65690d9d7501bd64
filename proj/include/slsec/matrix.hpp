// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major 64-bit matrix: the carrier for features, embeddings,
// gradients, and parameters everywhere in slsec.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace slsec {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rws);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
  bool all_finite() const;
  bool operator==(const Matrix&) const = default;
};

// c = a(m×k) · b(k×n)
Matrix mul(const Matrix& a, const Matrix& b);
// c = a(m×k) · bᵀ where b is n×k
Matrix mul_abt(const Matrix& a, const Matrix& b);
// c = aᵀ(k×m) · b(m·?) — a is m×k, b is m×n, result k×n
Matrix mul_atb(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

}  // namespace slsec
