#include "cosal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cosal/error.hpp"

namespace cosal {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::is_symmetric() const noexcept {
  if (rows_ != cols_) return false;
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = r + 1; c < cols_; ++c) {
      if ((*this)(r, c) != (*this)(c, r)) return false;
    }
  }
  return true;
}

bool Matrix::is_zero() const noexcept {
  for (double v : data_) {
    if (v != 0.0) return false;
  }
  return true;
}

double Matrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

std::vector<double> multiply(const Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) throw Error("matrix-vector length mismatch");
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v);
  return out;
}

bool solve(Matrix m, std::vector<double> rhs, std::vector<double>& x) {
  const std::size_t n = m.rows();
  if (m.cols() != n || rhs.size() != n) throw Error("solve: shape mismatch");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < n; ++r) {
      if (std::abs(m(r, k)) > std::abs(m(pivot, k))) pivot = r;
    }
    if (m(pivot, k) == 0.0) return false;
    if (pivot != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(pivot, c));
      std::swap(rhs[k], rhs[pivot]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = m(r, k) / m(k, k);
      if (f == 0.0) continue;
      for (std::size_t c = k; c < n; ++c) m(r, c) -= f * m(k, c);
      rhs[r] -= f * rhs[k];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    double acc = rhs[k];
    for (std::size_t c = k + 1; c < n; ++c) acc -= m(k, c) * x[c];
    x[k] = acc / m(k, k);
  }
  return true;
}

}  // namespace cosal
