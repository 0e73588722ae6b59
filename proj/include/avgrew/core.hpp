#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace avgrew {

using Index = std::size_t;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CountTable = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ParameterOutOfRange : public Error {
 public:
  using Error::Error;
};

/// A linear system that should be nonsingular for structural reasons was not.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

class NotUnichain : public Error {
 public:
  NotUnichain() : Error("chain is not unichain") {}
};

/// Extended nonnegative real: either a finite value or +infinity.
///
/// Expected hitting times and the policy hitting radius use this instead of a
/// large sentinel float so callers have to handle the infinite case.
class Extended {
 public:
  static Extended finite(double v) { return Extended(v, true); }
  static Extended infinite() { return Extended(0.0, false); }

  bool is_finite() const { return finite_; }
  bool is_infinite() const { return !finite_; }

  double value() const {
    if (!finite_) throw Error("value() on an infinite quantity");
    return value_;
  }

  /// IEEE representation, +inf for the infinite case.
  double as_double() const {
    return finite_ ? value_ : std::numeric_limits<double>::infinity();
  }

  friend bool operator<(const Extended& a, const Extended& b) {
    if (!a.finite_) return false;
    if (!b.finite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator==(const Extended& a, const Extended& b) {
    if (a.finite_ != b.finite_) return false;
    return !a.finite_ || a.value_ == b.value_;
  }

 private:
  Extended(double v, bool f) : value_(v), finite_(f) {}
  double value_;
  bool finite_;
};

inline double span(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return v.maxCoeff() - v.minCoeff();
}

}  // namespace avgrew
