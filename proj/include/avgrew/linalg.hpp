#pragma once

#include <string>
#include <type_traits>
#include <vector>

#include "avgrew/core.hpp"

namespace avgrew::linalg {

/// Reciprocal condition estimate below which a system is reported singular.
inline constexpr double kSingularRcond = 1e-14;

/// Solves a * x = b by dense LU with partial pivoting.
///
/// Throws SingularSystem instead of regularizing: every system solved in this
/// library is nonsingular when its structural preconditions hold.
template <typename Rhs>
auto solve(const Matrix& a, const Rhs& b, const char* what = "linear system") {
  Eigen::PartialPivLU<Matrix> lu(a);
  if (a.rows() > 0 && !(lu.rcond() > kSingularRcond))
    throw SingularSystem(std::string(what) + " is singular (rcond=" + std::to_string(lu.rcond()) + ")");
  using Result = std::conditional_t<Rhs::ColsAtCompileTime == 1, Vector, Matrix>;
  Result x = lu.solve(b);
  return x;
}

inline Matrix submatrix(const Matrix& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (Index i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
  return out;
}

inline Vector subvector(const Vector& v, const std::vector<Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (Index i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace avgrew::linalg
