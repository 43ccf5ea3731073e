#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mpgda {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

// Error hierarchy. Every failure raised by the library derives from Error so
// callers can catch one type; the subclasses name the contract that broke.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class ParameterError : public Error {
public:
  using Error::Error;
};

class DegenerateRetractionError : public Error {
public:
  using Error::Error;
};

class UnsupportedCompositionError : public Error {
public:
  using Error::Error;
};

class FeasibilityError : public Error {
public:
  using Error::Error;
};

class DegenerateGraphError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

// Raised when an inner solver misses its tolerance within its iteration cap.
class SubproblemFailure : public Error {
public:
  SubproblemFailure(const std::string &what, double best_residual)
      : Error(what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

private:
  double best_residual_;
};

inline Matrix sym(const Matrix &A) { return 0.5 * (A + A.transpose()); }

} // namespace mpgda
