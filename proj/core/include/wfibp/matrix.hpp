#pragma once

// Small dense row-major matrix with the handful of operations the
// linear-Gaussian model needs, including an in-repo Cholesky. Factor sizes
// here are K x K with K in the tens, so nothing is blocked or vectorized.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wfibp {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& operator()(int r, int c) { return d_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return d_[static_cast<std::size_t>(r) * cols_ + c]; }

  const std::vector<double>& data() const { return d_; }
  std::vector<double>& data() { return d_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matmul: shape mismatch");
    Matrix out(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < a.cols_; ++k) {
        const double v = a(i, k);
        if (v == 0.0) continue;
        for (int j = 0; j < b.cols_; ++j) out(i, j) += v * b(k, j);
      }
    return out;
  }

  friend Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw std::invalid_argument("matadd: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.d_.size(); ++i) out.d_[i] += b.d_[i];
    return out;
  }

  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
      throw std::invalid_argument("matsub: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.d_.size(); ++i) out.d_[i] -= b.d_[i];
    return out;
  }

  Matrix scaled(double s) const {
    Matrix out = *this;
    for (double& v : out.d_) v *= s;
    return out;
  }

  /// A^T A without forming the transpose.
  Matrix gram() const {
    Matrix g(cols_, cols_);
    for (int r = 0; r < rows_; ++r)
      for (int i = 0; i < cols_; ++i) {
        const double v = (*this)(r, i);
        if (v == 0.0) continue;
        for (int j = 0; j < cols_; ++j) g(i, j) += v * (*this)(r, j);
      }
    return g;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> d_;
};

/// Cholesky factorization of a symmetric positive-definite matrix.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& spd) : l_(spd.rows(), spd.cols()) {
    const int n = spd.rows();
    if (spd.cols() != n) throw std::invalid_argument("cholesky: not square");
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = spd(i, j);
        for (int k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
        if (i == j) {
          if (s <= 0.0)
            throw std::runtime_error("cholesky: matrix not positive-definite");
          l_(i, i) = std::sqrt(s);
        } else {
          l_(i, j) = s / l_(j, j);
        }
      }
    }
  }

  const Matrix& lower() const { return l_; }

  double log_det() const {
    double s = 0.0;
    for (int i = 0; i < l_.rows(); ++i) s += std::log(l_(i, i));
    return 2.0 * s;
  }

  /// Solve (L L^T) X = B for each column of B.
  Matrix solve(const Matrix& b) const {
    const int n = l_.rows();
    if (b.rows() != n) throw std::invalid_argument("cholesky solve: shape mismatch");
    Matrix x = b;
    for (int c = 0; c < b.cols(); ++c) {
      for (int i = 0; i < n; ++i) {  // forward
        double s = x(i, c);
        for (int k = 0; k < i; ++k) s -= l_(i, k) * x(k, c);
        x(i, c) = s / l_(i, i);
      }
      for (int i = n - 1; i >= 0; --i) {  // backward
        double s = x(i, c);
        for (int k = i + 1; k < n; ++k) s -= l_(k, i) * x(k, c);
        x(i, c) = s / l_(i, i);
      }
    }
    return x;
  }

  /// Solve L^T X = B (back substitution only); L^-T B is a factor of the
  /// inverse, so mu + s L^-T E draws from N(mu, s^2 (L L^T)^-1).
  Matrix solve_lt(const Matrix& b) const {
    const int n = l_.rows();
    if (b.rows() != n) throw std::invalid_argument("cholesky solve_lt: shape mismatch");
    Matrix x = b;
    for (int c = 0; c < b.cols(); ++c)
      for (int i = n - 1; i >= 0; --i) {
        double s = x(i, c);
        for (int k = i + 1; k < n; ++k) s -= l_(k, i) * x(k, c);
        x(i, c) = s / l_(i, i);
      }
    return x;
  }

  Matrix inverse() const { return solve(Matrix::identity(l_.rows())); }

 private:
  Matrix l_;
};

}  // namespace wfibp
