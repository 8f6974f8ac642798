#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pkld {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Random engine used by every sampler. Streams are derived from a root seed
/// with `make_stream` so concurrent chains never share state.
using Rng = std::mt19937_64;

/// Independent stream `stream` of the root seed `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Fill a vector with independent standard normals.
Vector standard_normal(Rng& rng, Eigen::Index p);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when an iterative projection solve does not reach tolerance.
class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Chain left the region ‖θ‖, ‖v‖ ≤ 1e8 or produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

inline void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

/// Eigenvalues of a symmetric matrix in increasing order.
Vector symmetric_eigenvalues(const Matrix& a);

}  // namespace pkld
