#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cosal {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return data_; }

  bool is_symmetric() const noexcept;
  bool is_zero() const noexcept;
  double trace() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm2(std::span<const double> a) noexcept;
std::vector<double> multiply(const Matrix& m, std::span<const double> v);

/// Solves m x = rhs by Gaussian elimination with partial pivoting.
/// Returns false when a pivot is exactly zero.
bool solve(Matrix m, std::vector<double> rhs, std::vector<double>& x);

}  // namespace cosal
