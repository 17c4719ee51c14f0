#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "rwre/error.hpp"

namespace rwre {

/// Small dense row-major matrix. Dimensions here never exceed
/// R(R+1)/2 for the jump bounds this library supports.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ > 0 ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) throw Error(ErrorCode::kInvalidArgument, "ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
  }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  Matrix& operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows_, b.cols_);
    multiply_into(a, b, out);
    return out;
  }

  /// out = a * b without allocating; out must not alias a or b.
  static void multiply_into(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.cols_ != b.rows_) throw Error(ErrorCode::kInvalidArgument, "matrix shape mismatch");
    if (out.rows_ != a.rows_ || out.cols_ != b.cols_) out = Matrix(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t j = 0; j < b.cols_; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols_; ++k) s += a(i, k) * b(k, j);
        out(i, j) = s;
      }
    }
  }

  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using RowVector = std::vector<double>;

/// row * m
inline RowVector times(const RowVector& row, const Matrix& m) {
  RowVector out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (row[i] == 0.0) continue;
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[i] * m(i, j);
  }
  return out;
}

inline double dot(const RowVector& a, const RowVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(const RowVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Spectral radius of a nonnegative matrix by power iteration from the
/// all-ones vector: the average log growth over the second half of the
/// iterations, which also handles periodic Perron roots. Nilpotent -> 0.
inline double spectral_radius_nonnegative(const Matrix& m, int iterations = 400) {
  RowVector v(m.rows(), 1.0);
  double log_growth = 0.0;
  int counted = 0;
  for (int it = 0; it < iterations; ++it) {
    RowVector w(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) w[i] += m(i, j) * v[j];
    }
    const double norm = max_abs(w);
    if (norm == 0.0) return 0.0;
    for (double& x : w) x /= norm;
    if (it >= iterations / 2) {
      log_growth += std::log(norm);
      ++counted;
    }
    v = std::move(w);
  }
  return std::exp(log_growth / counted);
}

}  // namespace rwre
