#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cosal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two grids that must share a shape do not. Callers resample first.
class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2);
};

/// Malformed input file or value (PNG, COFT, bbox list, taxonomy).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Covariance with no variance to analyse.
class DegenerateCovariance : public Error {
 public:
  DegenerateCovariance() : Error("degenerate covariance") {}
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string what, std::vector<double> last_iterate, double residual,
                   int iterations)
      : Error(std::move(what)),
        last_iterate_(std::move(last_iterate)),
        residual_(residual),
        iterations_(iterations) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
  int iterations_;
};

/// Ranking graph without any seed node.
class NoSeeds : public Error {
 public:
  NoSeeds() : Error("no seeds") {}
};

}  // namespace cosal
