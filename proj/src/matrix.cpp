// SPDX-License-Identifier: Apache-2.0

#include "slsec/matrix.hpp"

#include <cmath>

#include "slsec/error.hpp"

namespace slsec {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rws) {
  Matrix m;
  m.rows = rws.size();
  m.cols = rws.size() ? rws.begin()->size() : 0;
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : rws) {
    require(r.size() == m.cols, ErrorKind::kArgument, "from_rows: ragged rows");
    m.data.insert(m.data.end(), r.begin(), r.end());
  }
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix mul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, ErrorKind::kArgument, "mul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* crow = c.data.data() + i * c.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix mul_abt(const Matrix& a, const Matrix& b) {
  require(a.cols == b.cols, ErrorKind::kArgument, "mul_abt: inner dimensions differ");
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* crow = c.data.data() + i * c.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.data.data() + j * b.cols;
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      crow[j] = acc;
    }
  }
  return c;
}

Matrix mul_atb(const Matrix& a, const Matrix& b) {
  require(a.rows == b.rows, ErrorKind::kArgument, "mul_atb: inner dimensions differ");
  Matrix c(a.cols, b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* arow = a.data.data() + r * a.cols;
    const double* brow = b.data.data() + r * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      double ari = arow[i];
      if (ari == 0.0) continue;
      double* crow = c.data.data() + i * c.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += ari * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

}  // namespace slsec
