#pragma once

// Dense row-major matrices and the handful of vector operations the chain
// algorithms need. Everything here is desk scale; no attempt at blocking or
// vectorisation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "maxent/errors.hpp"

namespace maxent {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double sum(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline double sup_norm(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

inline double sup_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double sup_diff(const Matrix& a, const Matrix& b) {
  return sup_diff(a.data(), b.data());
}

// y = m x
inline Vector mat_vec(const Matrix& m, const Vector& x) {
  Vector y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += m(r, c) * x[c];
    y[r] = acc;
  }
  return y;
}

// y^t = x^t m
inline Vector vec_mat(const Vector& x, const Matrix& m) {
  Vector y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) y[c] += xr * m(r, c);
  }
  return y;
}

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double ark = a(r, k);
      if (ark == 0.0) continue;
      for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) += ark * b(k, c);
    }
  return out;
}

inline Vector row_sums(const Matrix& m) {
  Vector s(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) s[r] += m(r, c);
  return s;
}

inline Vector normalized(const Vector& v) {
  const double s = sum(v);
  if (s <= 0.0) throw DegeneracyError("cannot normalise a vector with nonpositive mass");
  Vector out(v);
  for (double& x : out) x /= s;
  return out;
}

inline Vector concat(const Vector& a, const Vector& b) {
  Vector out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Strong connectivity of the digraph carried by the strictly positive entries.
inline bool strongly_connected(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 0) return false;
  if (n == 1) return m(0, 0) > 0.0;
  auto full_reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        const double w = transpose ? m(v, u) : m(u, v);
        if (w > 0.0 && !seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return full_reach(false) && full_reach(true);
}

}  // namespace maxent
