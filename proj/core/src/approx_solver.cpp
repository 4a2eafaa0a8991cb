#include "invlqr/approx_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "invlqr/parallel.hpp"

namespace invlqr {

namespace {

// Affine map x -> mat(D (M x + c)) + offset.
AffineMatrixMap half_vec_map(const Matrix& M, const Vector& c, int n, const Matrix& offset,
                             double sign = 1.0) {
  AffineMatrixMap out;
  out.M0 = sign * (unvech(c, n).matrix() + offset);
  for (Eigen::Index j = 0; j < M.cols(); ++j) out.M.push_back(sign * unvech(M.col(j), n).matrix());
  return out;
}

Matrix lyap_vech(const Matrix& A) {
  const int n = static_cast<int>(A.rows());
  const Matrix I = Matrix::Identity(n, n);
  return elimination_matrix(n) * (kron(I, A) + kron(A, I)) * duplication_matrix(n);
}

Matrix clip_psd(const Matrix& H, double& clipped) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()));
  Vector ev = es.eigenvalues();
  clipped = std::min(0.0, ev(0));
  ev = ev.cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Floors F* onto the PSD cone when it misses by no more than solver accuracy.
void settle_F(ApproxSolution& s) {
  const double tol = 1e-6 * (1.0 + s.Fstar.matrix().norm());
  const double e = min_eig_sym(s.Fstar);
  if (e >= 0.0) return;
  if (e >= -tol) {
    s.Fstar = floor_psd(s.Fstar);
  } else {
    s.diagnostics.push_back("F* has eigenvalue " + fmt(e) + " beyond the flooring tolerance");
  }
}

}  // namespace

KktSystem assemble_Ahat(const StateSpaceSystem& sys) {
  const int n = sys.n();
  const int nq = vech_size(n);
  const Matrix BB = sys.B * sys.B.transpose();
  KktSystem k;
  k.n = n;
  k.Ahat = Matrix::Zero(3 * nq, 3 * nq);
  k.Ahat.block(0, 0, nq, nq) = -lyap_vech(sys.A.transpose());
  k.Ahat.block(nq, 0, nq, nq) = -0.5 * lyap_vech(BB);
  k.Ahat.block(nq, nq, nq, nq) = lyap_vech(sys.A);
  k.Ahat.block(2 * nq, nq, nq, nq) = Matrix::Identity(nq, nq);
  return k;
}

namespace {

struct StepIntegrals {
  Matrix PhiT;    // e^{Ahat T}
  Matrix intPhi;  // int_0^T e^{Ahat v} dv
  Matrix Eh;      // e^{Ahat h}
  Matrix F12;     // first block column of int_0^h e^{Ahat v} v/h dv
  Matrix F2;      // first block column of int_0^h e^{Ahat v} (h - v)/h dv
};

StepIntegrals step_integrals(const Matrix& Ahat, int nq, const TimeGrid& grid) {
  const Eigen::Index n3 = Ahat.rows();
  const double T = grid.horizon();
  const double h = grid.step();
  StepIntegrals si;
  si.PhiT = expm(Ahat * T);
  Matrix aug = Matrix::Zero(2 * n3, 2 * n3);
  aug.topLeftCorner(n3, n3) = Ahat * T;
  aug.topRightCorner(n3, n3) = Matrix::Identity(n3, n3) * T;
  si.intPhi = expm(aug).topRightCorner(n3, n3);

  Matrix aug3 = Matrix::Zero(3 * n3, 3 * n3);
  aug3.block(0, 0, n3, n3) = Ahat * h;
  aug3.block(0, n3, n3, n3) = Matrix::Identity(n3, n3);
  aug3.block(n3, 2 * n3, n3, n3) = Matrix::Identity(n3, n3);
  const Matrix E3 = expm(aug3);
  si.Eh = E3.block(0, 0, n3, n3);
  const Matrix F1 = E3.block(0, n3, n3, n3).leftCols(nq) * h;
  si.F2 = E3.block(0, 2 * n3, n3, n3).leftCols(nq) * h;
  si.F12 = F1 - si.F2;
  return si;
}

// int_0^T Phi(T - s) [x(s); 0; 0] ds with x linear between samples.
Vector forcing_integral(const StepIntegrals& si, const std::vector<Vector>& x) {
  const int N = static_cast<int>(x.size()) - 1;
  Vector C = Vector::Zero(si.Eh.rows());
  Matrix Ph = Matrix::Identity(si.Eh.rows(), si.Eh.cols());  // Phi(T - s_{k+1})
  for (int i = N - 1; i >= 0; --i) {
    C += Ph * (si.F12 * x[static_cast<std::size_t>(i)] + si.F2 * x[static_cast<std::size_t>(i + 1)]);
    Ph = Ph * si.Eh;
  }
  return C;
}

void set_blocks(KktSystem& k, const StepIntegrals& si, const Vector& C, double T) {
  const int nq = k.nq();
  k.T = T;
  k.A1 = si.PhiT.block(0, 0, nq, nq);
  k.A2 = si.PhiT.block(nq, 0, nq, nq);
  k.A3 = si.PhiT.block(2 * nq, 0, nq, nq);
  k.B1 = -si.intPhi.block(0, 0, nq, nq);
  k.B2 = -si.intPhi.block(nq, 0, nq, nq);
  k.B3 = -si.intPhi.block(2 * nq, 0, nq, nq);
  k.C1 = C.segment(0, nq);
  k.C2 = C.segment(nq, nq);
  k.C3 = C.segment(2 * nq, nq);
}

}  // namespace

KktSystem transition_blocks(KktSystem k, const std::vector<SymMatrix>& G, const TimeGrid& grid) {
  if (static_cast<int>(G.size()) != grid.size()) {
    throw InvalidArgument("transition_blocks: G sample count does not match grid");
  }
  const StepIntegrals si = step_integrals(k.Ahat, k.nq(), grid);
  std::vector<Vector> g;
  g.reserve(G.size());
  for (const auto& x : G) g.push_back(vech(x));
  set_blocks(k, si, -forcing_integral(si, g), grid.horizon());
  return k;
}

KktSystem transition_blocks(KktSystem k, const StateSpaceSystem& sys, const DerivedObservation& obs) {
  const TimeGrid& grid = obs.grid;
  if (static_cast<int>(obs.P0.size()) != grid.size()) {
    throw InvalidArgument("transition_blocks: P0 sample count does not match grid");
  }
  const int nq = k.nq();
  const StepIntegrals si = step_integrals(k.Ahat, nq, grid);
  const Matrix BB = sys.B * sys.B.transpose();
  std::vector<Vector> p0, rest;
  for (const auto& P : obs.P0) {
    const Matrix& X = P.matrix();
    p0.push_back(vech(P));
    rest.push_back(vech(SymMatrix::symmetrize(sys.A.transpose() * X + X * sys.A - X * BB * X)));
  }
  // The P0' part of G integrated by parts:
  // int Phi(T-s) E1 p0' ds = E1 p0(T) - Phi(T) E1 p0(0) + Ahat int Phi(T-s) E1 p0 ds.
  const Eigen::Index n3 = k.Ahat.rows();
  Vector e_T = Vector::Zero(n3), e_0 = Vector::Zero(n3);
  e_T.head(nq) = p0.back();
  e_0.head(nq) = p0.front();
  const Vector dpart = e_T - si.PhiT * e_0 + k.Ahat * forcing_integral(si, p0);
  set_blocks(k, si, -forcing_integral(si, rest) - dpart, grid.horizon());
  return k;
}

double QpLmiProblem::objective(const Vector& x) const { return x.dot(Hv * x) + fv.dot(x) + gv; }

QpLmiProblem assemble_qp(const KktSystem& k, const SymMatrix& P0T) {
  const int n = k.n;
  const int nq = k.nq();
  if (k.A1.rows() != nq) throw InvalidArgument("assemble_qp: transition blocks missing");
  const Matrix D = duplication_matrix(n);
  const Matrix W = D.transpose() * D;
  const Matrix Z = Matrix::Zero(nq, nq);

  QpLmiProblem qp;
  qp.n = n;
  qp.P0T = P0T;
  qp.Mq.resize(nq, 2 * nq);
  qp.Mq << Matrix::Identity(nq, nq), Z;
  qp.My.resize(nq, 2 * nq);
  qp.My << k.B1, k.A1;
  qp.Ml.resize(nq, 2 * nq);
  qp.Ml << k.B2, k.A2;
  qp.Mo.resize(nq, 2 * nq);
  qp.Mo << k.B3, k.A3;
  qp.C1 = k.C1;
  qp.C2 = k.C2;
  qp.C3 = k.C3;

  // -q'W omega(T) - (y(T) + p0T)' W lambda(T)
  const Vector cy = k.C1 + vech(P0T);
  const Matrix quad = -qp.Mq.transpose() * W * qp.Mo - qp.My.transpose() * W * qp.Ml;
  qp.Hv = 0.5 * (quad + quad.transpose());
  qp.fv = -qp.Mq.transpose() * W * k.C3 - qp.My.transpose() * W * k.C2 - qp.Ml.transpose() * W * cy;
  qp.gv = -cy.dot(W * k.C2);

  const Matrix zero = Matrix::Zero(n, n);
  const Vector zq = Vector::Zero(nq);
  qp.lmis = {half_vec_map(qp.Mq, zq, n, zero), half_vec_map(qp.My, k.C1, n, P0T.matrix()),
             half_vec_map(qp.Mo, k.C3, n, zero, -1.0), half_vec_map(qp.Ml, k.C2, n, zero, -1.0)};
  return qp;
}

ApproxSolution solve_qp_lmi(const QpLmiProblem& qp) {
  const int n = qp.n;
  ConicProblem p;
  p.dim = static_cast<int>(qp.Hv.rows());
  double clipped = 0.0;
  p.H = clip_psd(qp.Hv, clipped);
  p.f = qp.fv;
  p.g = qp.gv;
  p.lmis = qp.lmis;
  const ConicSolution sol = solve(p);

  ApproxSolution out;
  out.method = "kkt-qp";
  out.status = sol.status;
  if (clipped < 0.0) {
    out.diagnostics.push_back("quadratic term had eigenvalue " + fmt(clipped) + ", clipped to zero");
  }
  if (sol.status == ConicStatus::failed || sol.status == ConicStatus::infeasible) {
    throw NumericalError("solve_qp_lmi: backend returned " + std::string(to_string(sol.status)));
  }
  const Vector& x = sol.x;
  const int nq = vech_size(n);
  out.Qstar = unvech(qp.Mq * x, n);
  out.Y0star = unvech(x.tail(nq), n);
  out.Fstar = unvech(qp.My * x + qp.C1, n) + qp.P0T;
  out.LambdaT = unvech(qp.Ml * x + qp.C2, n);
  out.OmegaT = unvech(qp.Mo * x + qp.C3, n);
  out.objective_value = qp.objective(x);
  settle_F(out);
  if (out.objective_value < kQpObjectiveNegative) {
    out.suspect = true;
    out.diagnostics.push_back("objective " + fmt(out.objective_value) +
                              " is negative; the quadratic term is not positive semidefinite");
  } else if (out.objective_value > kQpObjectiveSuspect) {
    out.suspect = true;
    out.diagnostics.push_back("objective " + fmt(out.objective_value) +
                              " is bounded away from zero; KKT conditions not met");
  } else if (out.objective_value > kQpObjectiveAccept) {
    out.diagnostics.push_back("objective " + fmt(out.objective_value) + " above acceptance level " +
                              fmt(kQpObjectiveAccept));
  }
  return out;
}

ApproxSolution direct_residual_solve(const StateSpaceSystem& sys, const DerivedObservation& obs,
                                     const TimeGrid& grid) {
  const int n = sys.n();
  const int nq = vech_size(n);
  const int N = grid.steps();
  const double h = grid.step();
  if (static_cast<int>(obs.P0.size()) != grid.size()) {
    throw InvalidArgument("direct_residual_solve: P0 sample count does not match grid");
  }
  const Matrix M = -lyap_vech(sys.A.transpose());
  // With U = Y + P0 the Lyapunov equation reads U' = -A'U - UA - Q + P0 BB' P0,
  // which needs no derivative of the sampled P0.
  const Matrix BB = sys.B * sys.B.transpose();
  std::vector<Vector> g, p0;
  for (const auto& x : obs.P0) {
    p0.push_back(vech(x));
    g.push_back(vech(SymMatrix::symmetrize(x.matrix() * BB * x.matrix())));
  }

  // Trajectories: columns 0..nq-1 for q = e_j, nq..2nq-1 for y_T = e_j, 2nq for the P0 forcing.
  const int nb = 2 * nq + 1;
  std::vector<std::vector<Vector>> traj(static_cast<std::size_t>(nb));
  parallel_for(static_cast<std::size_t>(nb), [&](std::size_t b) {
    const int bi = static_cast<int>(b);
    Vector y = Vector::Zero(nq);
    Vector uconst = Vector::Zero(nq);
    const bool forced = bi == 2 * nq;
    if (bi < nq) uconst(bi) = -1.0;
    else if (!forced) y(bi - nq) = 1.0;
    else y = p0.back();
    std::vector<Vector> out(static_cast<std::size_t>(N) + 1);
    out[static_cast<std::size_t>(N)] = y;
    for (int i = N; i > 0; --i) {
      Vector u0 = uconst, um = uconst, u1 = uconst;
      if (forced) {
        u0 = g[static_cast<std::size_t>(i)];
        u1 = g[static_cast<std::size_t>(i - 1)];
        um = 0.5 * (u0 + u1);
      }
      const Vector k1 = M * y + u0;
      const Vector k2 = M * (y - 0.5 * h * k1) + um;
      const Vector k3 = M * (y - 0.5 * h * k2) + um;
      const Vector k4 = M * (y - h * k3) + u1;
      y -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      out[static_cast<std::size_t>(i - 1)] = y;
    }
    if (forced) {
      for (int i = 0; i <= N; ++i) out[static_cast<std::size_t>(i)] -= p0[static_cast<std::size_t>(i)];
    }
    traj[b] = std::move(out);
  });

  const Matrix D = duplication_matrix(n);
  const Matrix S = D.transpose() * kron(Matrix::Identity(n, n), sys.B * sys.B.transpose()) * D;
  Matrix Hq = Matrix::Zero(2 * nq, 2 * nq);
  Vector fq = Vector::Zero(2 * nq);
  double c0 = 0.0;
  Matrix J(nq, 2 * nq);
  for (int i = 0; i <= N; ++i) {
    const double w = (i == 0 || i == N) ? 0.5 * h : h;
    for (int b = 0; b < 2 * nq; ++b) J.col(b) = traj[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
    const Vector& c = traj[static_cast<std::size_t>(2 * nq)][static_cast<std::size_t>(i)];
    const Matrix SJ = S * J;
    Hq.noalias() += w * J.transpose() * SJ;
    fq.noalias() += w * SJ.transpose() * c;
    c0 += w * c.dot(S * c);
  }

  ConicProblem p;
  p.dim = 2 * nq;
  p.H = 0.25 * (Hq + Hq.transpose());
  p.f = fq;
  p.g = 0.5 * c0;
  Matrix Sq(nq, 2 * nq), Sy(nq, 2 * nq);
  Sq << Matrix::Identity(nq, nq), Matrix::Zero(nq, nq);
  Sy << Matrix::Zero(nq, nq), Matrix::Identity(nq, nq);
  const Vector zq = Vector::Zero(nq);
  p.lmis = {half_vec_map(Sq, zq, n, Matrix::Zero(n, n)), half_vec_map(Sy, zq, n, obs.P0T.matrix())};
  const ConicSolution sol = solve(p);
  if (sol.status == ConicStatus::failed || sol.status == ConicStatus::infeasible) {
    throw NumericalError("direct_residual_solve: backend returned " +
                         std::string(to_string(sol.status)));
  }

  ApproxSolution out;
  out.method = "direct";
  out.status = sol.status;
  const Vector& x = sol.x;
  out.Qstar = unvech(x.head(nq), n);
  out.Fstar = unvech(x.tail(nq), n) + obs.P0T;
  for (int b = 0; b < 2 * nq; ++b) J.col(b) = traj[static_cast<std::size_t>(b)][0];
  out.Y0star = unvech(J * x + traj[static_cast<std::size_t>(2 * nq)][0], n);
  // Negated LMI duals stand in for the terminal multipliers.
  out.OmegaT = sol.Z.size() > 0 ? SymMatrix::symmetrize(-sol.Z[0]) : SymMatrix::zero(n);
  out.LambdaT = sol.Z.size() > 1 ? SymMatrix::symmetrize(-sol.Z[1]) : SymMatrix::zero(n);
  out.objective_value = sol.objective;
  settle_F(out);
  return out;
}

double residual_metric(const FeedbackTrajectory& K_ref, const FeedbackTrajectory& K_star) {
  if (!K_ref.grid.same_as(K_star.grid) || K_ref.K.size() != K_star.K.size()) {
    throw InvalidArgument("residual_metric: grid mismatch");
  }
  const int N = K_ref.grid.steps();
  const double h = K_ref.grid.step();
  double acc = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double w = (i == 0 || i == N) ? 0.5 * h : h;
    acc += w * (K_star.K[static_cast<std::size_t>(i)] - K_ref.K[static_cast<std::size_t>(i)]).squaredNorm();
  }
  return acc;
}

double max_gain_error(const FeedbackTrajectory& K_ref, const FeedbackTrajectory& K_star) {
  if (!K_ref.grid.same_as(K_star.grid) || K_ref.K.size() != K_star.K.size()) {
    throw InvalidArgument("max_gain_error: grid mismatch");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < K_ref.K.size(); ++i) e = std::max(e, (K_star.K[i] - K_ref.K[i]).norm());
  return e;
}

SymMatrix floor_psd(const SymMatrix& X) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(X.matrix());
  const Vector ev = es.eigenvalues().cwiseMax(0.0);
  return SymMatrix::symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

FeedbackTrajectory approx_gain(const StateSpaceSystem& sys, const ApproxSolution& sol,
                               const TimeGrid& grid) {
  const QuadraticCost cost = QuadraticCost::make(floor_psd(sol.Qstar), floor_psd(sol.Fstar), grid.horizon());
  return feedback_from_P(sys, solve_dre(sys, cost, grid));
}

void evaluate_residual(const StateSpaceSystem& sys, const FeedbackTrajectory& K_ref,
                       ApproxSolution& sol) {
  const FeedbackTrajectory Ks = approx_gain(sys, sol, K_ref.grid);
  sol.residual = residual_metric(K_ref, Ks);
  sol.max_gain_error = max_gain_error(K_ref, Ks);
}

ApproxRecovery recover_approx(const StateSpaceSystem& sys, const FeedbackTrajectory& K,
                              ApproxMethod method) {
  K.validate(sys.n(), sys.m());
  ApproxRecovery rec;
  rec.obs = compute_G(sys, compute_P0(sys, K));
  if (method == ApproxMethod::kkt_qp || method == ApproxMethod::both) {
    const KktSystem k = transition_blocks(assemble_Ahat(sys), sys, rec.obs);
    rec.solutions.push_back(solve_qp_lmi(assemble_qp(k, rec.obs.P0T)));
  }
  if (method == ApproxMethod::direct || method == ApproxMethod::both) {
    rec.solutions.push_back(direct_residual_solve(sys, rec.obs, K.grid));
  }
  for (auto& s : rec.solutions) evaluate_residual(sys, K, s);
  return rec;
}

}  // namespace invlqr
