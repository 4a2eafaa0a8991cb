#pragma once

#include <random>

#include "invlqr/lqr_forward.hpp"
#include "invlqr/matkit.hpp"

namespace invlqr::testing {

inline Matrix randn(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix M(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) M(i, j) = nd(rng);
  }
  return M;
}

inline SymMatrix random_psd(std::mt19937_64& rng, int n, double shift = 0.0) {
  const Matrix M = randn(rng, n, n);
  return SymMatrix::symmetrize(M * M.transpose() / n + shift * Matrix::Identity(n, n));
}

inline SymMatrix random_sym(std::mt19937_64& rng, int n) {
  return SymMatrix::symmetrize(randn(rng, n, n));
}

// Random controllable pair with moderately sized A.
inline StateSpaceSystem random_system(std::mt19937_64& rng, int n, int m) {
  for (;;) {
    const Matrix A = randn(rng, n, n) * 0.8;
    const Matrix B = randn(rng, n, m);
    if (rank_tol(controllability_matrix(A, B), 1e-6) == n && rank_tol(B, 1e-6) == m) {
      return StateSpaceSystem::make(A, B);
    }
  }
}

inline FeedbackTrajectory forward_gain(const StateSpaceSystem& sys, const SymMatrix& Q,
                                       const SymMatrix& F, double T = 1.0, int N = 1000) {
  return feedback_from_P(sys, solve_dre(sys, QuadraticCost::make(Q, F, T), TimeGrid(T, N)));
}

}  // namespace invlqr::testing
