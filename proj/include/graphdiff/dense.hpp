#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace graphdiff {

// Row-major dense matrix of doubles. Small sizes only (rate matrices, joint
// oracle tables); nothing here is performance critical.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  }
  return out;
}

inline double max_abs(const Matrix& m) {
  double v = 0.0;
  for (double x : m.data) {
    const double a = x < 0 ? -x : x;
    if (a > v) v = a;
  }
  return v;
}

}  // namespace graphdiff
