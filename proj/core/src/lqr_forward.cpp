#include "invlqr/lqr_forward.hpp"

#include <cmath>
#include <string>

namespace invlqr {

TimeGrid::TimeGrid(double T, int N) : T_(T), N_(N) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("TimeGrid: horizon must be positive");
  if (N < 2) throw InvalidArgument("TimeGrid: need N >= 2 steps");
}

bool TimeGrid::same_as(const TimeGrid& o) const {
  return N_ == o.N_ && std::abs(T_ - o.T_) <= 1e-12 * (1.0 + T_);
}

void FeedbackTrajectory::validate(int n, int m) const {
  if (static_cast<int>(K.size()) != grid.size()) {
    throw InvalidArgument("FeedbackTrajectory: sample count does not match grid");
  }
  for (std::size_t i = 0; i < K.size(); ++i) {
    if (K[i].rows() != m || K[i].cols() != n) {
      throw InvalidArgument("FeedbackTrajectory: gain " + std::to_string(i) + " is not " +
                            std::to_string(m) + "x" + std::to_string(n));
    }
    require_finite(K[i], "FeedbackTrajectory");
  }
}

StateSpaceSystem StateSpaceSystem::make(const Matrix& A, const Matrix& B) {
  require_square(A, "StateSpaceSystem A");
  require_finite(A, "StateSpaceSystem A");
  require_finite(B, "StateSpaceSystem B");
  if (B.rows() != A.rows()) throw InvalidArgument("StateSpaceSystem: B must have n rows");
  if (B.cols() < 1 || B.cols() > A.rows()) {
    throw InvalidArgument("StateSpaceSystem: need 1 <= m <= n");
  }
  if (rank_tol(B) != B.cols()) {
    throw InvalidArgument("StateSpaceSystem: B must have full column rank");
  }
  if (rank_tol(controllability_matrix(A, B)) != A.rows()) {
    throw InvalidArgument("StateSpaceSystem: (A, B) is not controllable");
  }
  return {A, B};
}

QuadraticCost QuadraticCost::make(const SymMatrix& Q, const SymMatrix& F, double T) {
  if (Q.order() != F.order()) throw InvalidArgument("QuadraticCost: Q and F orders differ");
  if (!is_psd(Q)) throw InvalidArgument("QuadraticCost: Q must be positive semidefinite");
  if (!is_psd(F)) throw InvalidArgument("QuadraticCost: F must be positive semidefinite");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("QuadraticCost: T must be positive");
  return {Q, F, T};
}

Matrix riccati_rhs(const StateSpaceSystem& sys, const Matrix& Q, const Matrix& P) {
  const Matrix PB = P * sys.B;
  return P * sys.A + sys.A.transpose() * P - PB * PB.transpose() + Q;
}

RiccatiSolution solve_dre(const StateSpaceSystem& sys, const QuadraticCost& cost,
                          const TimeGrid& grid, int substeps) {
  const int n = sys.n();
  if (cost.Q.order() != n) throw InvalidArgument("solve_dre: cost order does not match plant");
  if (std::abs(cost.T - grid.horizon()) > 1e-12 * (1.0 + cost.T)) {
    throw InvalidArgument("solve_dre: grid horizon differs from cost horizon");
  }
  if (substeps < 1) throw InvalidArgument("solve_dre: substeps must be positive");
  const int N = grid.steps();
  const double h = grid.step() / substeps;
  const Matrix& Q = cost.Q.matrix();

  RiccatiSolution sol;
  sol.grid = grid;
  sol.P.resize(static_cast<std::size_t>(N) + 1);
  sol.P[N] = cost.F;
  Matrix P = cost.F.matrix();
  // In reversed time s = T - t the equation reads dP/ds = rhs(P).
  for (int i = N; i > 0; --i) {
    for (int s = 0; s < substeps; ++s) {
      const Matrix k1 = riccati_rhs(sys, Q, P);
      const Matrix k2 = riccati_rhs(sys, Q, P + 0.5 * h * k1);
      const Matrix k3 = riccati_rhs(sys, Q, P + 0.5 * h * k2);
      const Matrix k4 = riccati_rhs(sys, Q, P + h * k3);
      P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      P = 0.5 * (P + P.transpose());
    }
    if (!P.allFinite()) {
      throw NumericalError("solve_dre: non-finite value at step " + std::to_string(i - 1) +
                           "; the grid is too coarse");
    }
    const SymMatrix Ps = SymMatrix::symmetrize(P);
    const double lmin = min_eig_sym(Ps);
    if (lmin < -1e-9 * (1.0 + P.norm())) {
      throw NumericalError("solve_dre: P lost positive semidefiniteness at grid index " +
                           std::to_string(i - 1) + " (min eigenvalue " + std::to_string(lmin) + ")");
    }
    sol.P[i - 1] = Ps;
  }
  return sol;
}

FeedbackTrajectory feedback_from_P(const StateSpaceSystem& sys, const RiccatiSolution& sol) {
  FeedbackTrajectory out;
  out.grid = sol.grid;
  out.K.reserve(sol.P.size());
  for (const auto& P : sol.P) out.K.push_back(-sys.B.transpose() * P.matrix());
  return out;
}

std::vector<Vector> simulate_closed_loop(const StateSpaceSystem& sys,
                                         const FeedbackTrajectory& K, const Vector& x0) {
  if (x0.size() != sys.n()) throw InvalidArgument("simulate_closed_loop: x0 has wrong length");
  K.validate(sys.n(), sys.m());
  const int N = K.grid.steps();
  const double h = K.grid.step();
  std::vector<Vector> x(static_cast<std::size_t>(N) + 1);
  x[0] = x0;
  for (int i = 0; i < N; ++i) {
    const Matrix A0 = sys.A + sys.B * K.K[i];
    const Matrix A1 = sys.A + sys.B * K.K[i + 1];
    const Matrix Am = 0.5 * (A0 + A1);
    const Vector& xi = x[i];
    const Vector k1 = A0 * xi;
    const Vector k2 = Am * (xi + 0.5 * h * k1);
    const Vector k3 = Am * (xi + 0.5 * h * k2);
    const Vector k4 = A1 * (xi + h * k3);
    x[i + 1] = xi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x[i + 1].allFinite()) {
      throw NumericalError("simulate_closed_loop: non-finite state at step " + std::to_string(i + 1));
    }
  }
  return x;
}

}  // namespace invlqr
