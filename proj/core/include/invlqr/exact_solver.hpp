#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "invlqr/lqr_forward.hpp"
#include "invlqr/matkit.hpp"
#include "invlqr/observation.hpp"
#include "invlqr/sdp.hpp"

namespace invlqr {

struct Matrices {
  Matrix Atilde;  // -I(x)A - A(x)I
  Matrix Btilde;  // I(x)B
  Matrix H;       // stacked Btilde' (Atilde')^k, k = 0..n-1
  Matrix N;       // block 0 zero, block k = -Btilde' (Atilde')^(k-1)
};

Matrices existence_matrices(const Matrix& A, const Matrix& B);

// Rows 0..nm-1 first, then rows of later blocks in order whenever they raise the rank.
std::vector<int> select_rows(const Matrix& H, int n, int m);

struct VectorizedSystem {
  int n = 0;
  int m = 0;
  TimeGrid grid;
  Matrices mats;
  std::vector<int> rowSelection;
  int maxBlock = 0;  // highest block index among the selected rows
  Matrix Hbar;
  Matrix Nbar;
  std::vector<Vector> fbar;
  std::vector<Vector> fbarDot;
  std::vector<Vector> vecG;
};

int required_g_order(const StateSpaceSystem& sys);

// Gk[k][i] = G^(k)(t_i) for k = 0..required_g_order(sys).
VectorizedSystem build_vectorized_system(const StateSpaceSystem& sys,
                                         const std::vector<std::vector<SymMatrix>>& Gk,
                                         const TimeGrid& grid);
// Estimates the G derivatives from P0 samples.
VectorizedSystem build_vectorized_system(const StateSpaceSystem& sys, const DerivedObservation& obs);

struct QLinearSystem {
  Matrix AQ;
  std::vector<Vector> BQ;
};

QLinearSystem assemble_AQ_BQ(const VectorizedSystem& vsys);

struct ConstancyCheck {
  bool constant = false;
  double deviation = 0.0;
  int worst_index = -1;
  Vector mean;
};

inline constexpr int kDefaultTrim = 20;

ConstancyCheck check_BQ_constancy(const std::vector<Vector>& BQ, double tol = 1e-4,
                                  int trim = kDefaultTrim);

struct SymmetricSystem {
  Matrix As;  // unknowns [vech(Q); vech(Y(T))]
  Vector bs;
};

SymmetricSystem assemble_symmetric_system(const VectorizedSystem& vsys, const Matrix& AQ,
                                          const Vector& BQmean);

struct Parametrization {
  bool consistent = false;
  double residual = 0.0;
  Vector particular;
  Matrix nullbasis;  // columns [q; y_T]
  int numeric_rank_deficiency = 0;
  std::string warning;
};

int solution_dimension(int n, int m);

Parametrization consistency_and_parametrize(const Matrix& As, const Vector& bs, int expected_r,
                                            double tol = 1e-6, double nullRelTol = 1e-8);

struct SolutionSpace {
  int n = 0;
  int r = 0;
  SymMatrix Q0;
  SymMatrix F0;  // P0(T) + Y_T0
  std::vector<SymMatrix> Qbasis;
  std::vector<SymMatrix> Ybasis;  // F directions
  std::optional<std::pair<double, double>> interval;
  bool lower_unbounded = false;
  bool upper_unbounded = false;

  SymMatrix Q(const Vector& v) const;
  SymMatrix F(const Vector& v) const;
  // Q(v) + relax I and F(v) + relax I as affine maps of v.
  std::vector<AffineMatrixMap> pencils(double relax = 0.0) const;
  // min over both pencils of the smallest eigenvalue at v.
  double min_eig(const Vector& v) const;
};

SolutionSpace make_solution_space(const Parametrization& par, int n, const SymMatrix& P0T);

struct LmiFeasibility {
  bool feasible = false;
  double slack = 0.0;
  Vector v;
  bool capped = false;
  ConicStatus status = ConicStatus::failed;
};

// Max-slack test; for r = 1 also stores the parameter interval in space.
LmiFeasibility lmi_feasibility(SolutionSpace& space, double intervalTol = 1e-9);

struct StructuralBasis {
  Matrix V2;
  std::vector<SymMatrix> dQ;
  std::vector<SymMatrix> dF;
};

StructuralBasis solution_space_structure(const StateSpaceSystem& sys);

struct MinConditionResult {
  SymMatrix Q;
  SymMatrix F;
  Vector v;
  double alpha = 0.0;
  ConicStatus status = ConicStatus::failed;
};

// min alpha s.t. alpha I >= Q(v) >= 0, F(v) >= 0.
MinConditionResult min_condition_number(const SolutionSpace& space);

struct UniquenessCertificate {
  SymMatrix Xstar;
  int l = 0;
  int tangent_intersection_dim = 0;
  bool unique = false;
  bool conclusive = false;
  std::string reason;
};

UniquenessCertificate uniqueness_certificate(const SymMatrix& Qbar,
                                             const std::vector<SymMatrix>& basis);

struct Membership {
  bool member = false;
  double residual = 0.0;
  Vector v;
  SymMatrix F;
  double min_eig_Q = 0.0;
  double min_eig_F = 0.0;
};

Membership membership_test(const SymMatrix& Q, const SolutionSpace& space, double tol);

bool indefinite_delta_check(const SymMatrix& Q1, const SymMatrix& Q2, double tol = 1e-8);

// Expresses the r = 1 interval in the parametrization Qref + alpha * dQ.
struct Reparametrized {
  double lo = 0.0;
  double hi = 0.0;
  double offset_residual = 0.0;     // distance of Qref from the affine family
  double direction_residual = 0.0;  // distance of dQ from span{Q1}
};

Reparametrized reparametrize_interval(const SolutionSpace& space, const SymMatrix& Qref,
                                      const SymMatrix& dQ);

// vec(Y(t_i)) = Hbar^{-1}(-fbar(t_i) - Nbar vec(Q)).
std::vector<SymMatrix> reconstruct_Y(const VectorizedSystem& vsys, const SymMatrix& Q);

struct ExactOptions {
  double tol_jameson = 1e-8;
  double tol_constancy = 1e-4;
  int trim = kDefaultTrim;
  double tol_consistency = 1e-6;
  double null_rel_tol = 1e-8;
};

struct ExistenceReport {
  JamesonReport jameson;
  ConstancyCheck constancy;
  bool consistent = false;
  double consistency_residual = 0.0;
  LmiFeasibility lmi;
  std::vector<std::string> diagnostics;

  bool feasible() const {
    return jameson.passed() && constancy.constant && consistent && lmi.feasible;
  }
};

struct ExactRecovery {
  ExistenceReport report;
  std::optional<VectorizedSystem> vsys;
  std::optional<SolutionSpace> space;
  DerivedObservation obs;
};

// Full existence pipeline; stops at the first failed stage.
ExactRecovery recover_exact(const StateSpaceSystem& sys, const FeedbackTrajectory& K,
                            const ExactOptions& opt = {});

}  // namespace invlqr
