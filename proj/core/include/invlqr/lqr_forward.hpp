#pragma once

#include <vector>

#include "invlqr/matkit.hpp"
#include "invlqr/trajectory.hpp"

namespace invlqr {

struct StateSpaceSystem {
  Matrix A;
  Matrix B;

  // Validates shapes, full column rank of B and controllability.
  static StateSpaceSystem make(const Matrix& A, const Matrix& B);

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

struct QuadraticCost {
  SymMatrix Q;
  SymMatrix F;
  double T = 1.0;

  // Validates Q, F PSD and T > 0.
  static QuadraticCost make(const SymMatrix& Q, const SymMatrix& F, double T);
};

struct RiccatiSolution {
  TimeGrid grid;
  std::vector<SymMatrix> P;
};

// Right-hand side of -dP/dt = PA + A'P - PBB'P + Q.
Matrix riccati_rhs(const StateSpaceSystem& sys, const Matrix& Q, const Matrix& P);

inline constexpr int kRiccatiSubsteps = 4;

// Fixed-step RK4 with `substeps` steps per grid interval, sampled on the grid.
RiccatiSolution solve_dre(const StateSpaceSystem& sys, const QuadraticCost& cost,
                          const TimeGrid& grid, int substeps = kRiccatiSubsteps);

FeedbackTrajectory feedback_from_P(const StateSpaceSystem& sys, const RiccatiSolution& sol);

// x' = (A + B K(t)) x by RK4, K linear between samples.
std::vector<Vector> simulate_closed_loop(const StateSpaceSystem& sys,
                                         const FeedbackTrajectory& K, const Vector& x0);

}  // namespace invlqr
