#pragma once

#include <string>
#include <vector>

#include "invlqr/lqr_forward.hpp"
#include "invlqr/matkit.hpp"
#include "invlqr/observation.hpp"
#include "invlqr/sdp.hpp"

namespace invlqr {

// Vectorized KKT dynamics z' = Ahat z + [-q - g; 0; 0] over z = [y; lambda; omega],
// each block a half-vectorized symmetric matrix. z(T) = [A_i; B_i; C_i]-affine in (y0, q):
//   block_i(T) = A_i y0 + B_i q + C_i.
struct KktSystem {
  int n = 0;
  double T = 0.0;
  Matrix Ahat;
  Matrix A1, A2, A3;
  Matrix B1, B2, B3;
  Vector C1, C2, C3;

  int nq() const { return n * (n + 1) / 2; }
};

KktSystem assemble_Ahat(const StateSpaceSystem& sys);

// Fills A_i, B_i by matrix exponentials and C_i by exact integration of the
// piecewise-linear interpolant of g = vech(G) over the grid.
KktSystem transition_blocks(KktSystem ksys, const std::vector<SymMatrix>& G, const TimeGrid& grid);
// Same blocks from P0 samples alone: the P0' term of G is integrated by parts,
// so no derivative of the (possibly noisy) observation is formed.
KktSystem transition_blocks(KktSystem ksys, const StateSpaceSystem& sys, const DerivedObservation& obs);

// minimize x'Hv x + fv'x + gv over x = [q; y0] subject to
// Q(x), Y(T)(x) + P0(T), -Omega(T)(x), -Lambda(T)(x) all PSD.
struct QpLmiProblem {
  int n = 0;
  Matrix Hv;
  Vector fv;
  double gv = 0.0;
  // Affine half-vectorized maps of x: Q = Mq x, y(T) = My x + C1, ...
  Matrix Mq, My, Ml, Mo;
  Vector C1, C2, C3;
  SymMatrix P0T;
  std::vector<AffineMatrixMap> lmis;
  double hv_clipped = 0.0;  // most negative eigenvalue removed from Hv, 0 if none

  double objective(const Vector& x) const;
};

QpLmiProblem assemble_qp(const KktSystem& ksys, const SymMatrix& P0T);

struct ApproxSolution {
  std::string method;
  SymMatrix Qstar;
  SymMatrix Fstar;
  SymMatrix Y0star;
  SymMatrix LambdaT;
  SymMatrix OmegaT;
  double objective_value = 0.0;
  // Control residual against the observed gain, filled by evaluate_residual.
  double residual = 0.0;
  double max_gain_error = 0.0;
  ConicStatus status = ConicStatus::failed;
  bool suspect = false;
  std::vector<std::string> diagnostics;
};

inline constexpr double kQpObjectiveAccept = 1e-5;
inline constexpr double kQpObjectiveSuspect = 1e-3;
inline constexpr double kQpObjectiveNegative = -1e-6;

ApproxSolution solve_qp_lmi(const QpLmiProblem& qp);

// Discretized residual minimization: Y(t_i) affine in (q, y_T) by integrating
// Y' = -A'Y - YA - Q - G backward with RK4, one solve per basis element. The
// equation is integrated for Y + P0 so the P0' term inside G is never differenced.
ApproxSolution direct_residual_solve(const StateSpaceSystem& sys, const DerivedObservation& obs,
                                     const TimeGrid& grid);

// Trapezoid integral of ||K_star - K_ref||_F^2.
double residual_metric(const FeedbackTrajectory& K_ref, const FeedbackTrajectory& K_star);
double max_gain_error(const FeedbackTrajectory& K_ref, const FeedbackTrajectory& K_star);

// Nearest PSD matrix (negative eigenvalues set to zero).
SymMatrix floor_psd(const SymMatrix& X);

// Gain generated by (floor_psd(Q*), floor_psd(F*)) on the grid of K_ref.
FeedbackTrajectory approx_gain(const StateSpaceSystem& sys, const ApproxSolution& sol,
                               const TimeGrid& grid);

// Fills residual and max_gain_error of sol against K_ref.
void evaluate_residual(const StateSpaceSystem& sys, const FeedbackTrajectory& K_ref,
                       ApproxSolution& sol);

enum class ApproxMethod { kkt_qp, direct, both };

struct ApproxRecovery {
  DerivedObservation obs;
  std::vector<ApproxSolution> solutions;
};

// P0 and G from K, then the requested methods, each with residual filled in.
ApproxRecovery recover_approx(const StateSpaceSystem& sys, const FeedbackTrajectory& K,
                              ApproxMethod method);

}  // namespace invlqr
