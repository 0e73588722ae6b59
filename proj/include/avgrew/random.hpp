#pragma once

#include <cstdint>

#include "avgrew/core.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/oracles.hpp"
#include "avgrew/rng.hpp"

// Random model generators for property checks and tests.
namespace avgrew::random {

inline double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Integer in [lo, hi].
inline Index integer(CounterRng& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(rng.next_u64() % (hi - lo + 1));
}

inline bool coin(CounterRng& rng, double p) { return rng.uniform() < p; }

/// Probability vector; each entry is zeroed with probability `sparsity`, keeping at least one.
inline Vector simplex(CounterRng& rng, Index n, double sparsity = 0.0) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = coin(rng, sparsity) ? 0.0 : -std::log1p(-rng.uniform());
  if (v.sum() <= 0.0) v(static_cast<Eigen::Index>(integer(rng, 0, n - 1))) = 1.0;
  return v / v.sum();
}

inline Vector vector(CounterRng& rng, Index n, double lo, double hi) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = uniform(rng, lo, hi);
  return v;
}

inline Matrix matrix(CounterRng& rng, Index rows, Index cols, double lo, double hi) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng, lo, hi);
  return m;
}

inline Matrix stochastic_matrix(CounterRng& rng, Index rows, Index cols, double sparsity = 0.0) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = simplex(rng, cols, sparsity).transpose();
  return m;
}

inline TabularMdp mdp(CounterRng& rng, Index S, Index A, double sparsity = 0.0) {
  return TabularMdp(S, A, stochastic_matrix(rng, S * A, S, sparsity), matrix(rng, S, A, 0.0, 1.0));
}

/// Chain with random sparsity; may be multichain.
inline MarkovChain chain(CounterRng& rng, Index S) {
  const double sparsity = uniform(rng, 0.3, 0.9);
  return {stochastic_matrix(rng, S, S, sparsity), vector(rng, S, 0.0, 1.0)};
}

/// Fully supported chain: irreducible and aperiodic.
inline MarkovChain dense_chain(CounterRng& rng, Index S) {
  return {stochastic_matrix(rng, S, S, 0.0), vector(rng, S, 0.0, 1.0)};
}

/// Unichain by rejection; falls back to a dense chain after repeated misses.
inline MarkovChain unichain_chain(CounterRng& rng, Index S) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    MarkovChain c = chain(rng, S);
    if (classify(c).unichain()) return c;
  }
  return dense_chain(rng, S);
}

/// Chain with at least two closed classes: two disjoint blocks plus transient feeders.
inline MarkovChain multichain_chain(CounterRng& rng, Index S) {
  if (S < 2) throw ParameterOutOfRange("multichain needs S >= 2");
  const Index split = integer(rng, 1, S - 1);
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
  for (Index s = 0; s < S; ++s) {
    const bool left = s < split;
    const Index lo = left ? 0 : split, hi = left ? split : S;
    const Vector w = simplex(rng, hi - lo, 0.3);
    for (Index t = lo; t < hi; ++t)
      p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = w(static_cast<Eigen::Index>(t - lo));
  }
  return {p, vector(rng, S, 0.0, 1.0)};
}

}  // namespace avgrew::random
