#include "invlqr/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace invlqr {

namespace {

int numeric_rank_abs(const Matrix& X, double cut) {
  if (X.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(X);
  const Vector& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) ++r;
  }
  return r;
}

Matrix rows_of(const Matrix& X, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  return out;
}

Vector entries_of(const Vector& x, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = x(idx[i]);
  return out;
}

// Symmetric basis E_ii, E_ij + E_ji of S^k in vech order.
std::vector<Matrix> symmetric_basis(int k) {
  std::vector<Matrix> out;
  for (int j = 0; j < k; ++j) {
    for (int i = j; i < k; ++i) {
      Matrix E = Matrix::Zero(k, k);
      E(i, j) = 1.0;
      E(j, i) = 1.0;
      out.push_back(E);
    }
  }
  return out;
}

double frob_dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

}  // namespace

Matrices existence_matrices(const Matrix& A, const Matrix& B) {
  require_square(A, "existence_matrices");
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  const Matrix I = Matrix::Identity(n, n);
  Matrices out;
  out.Atilde = -kron(I, A) - kron(A, I);
  out.Btilde = kron(I, B);
  const int nm = n * m;
  out.H.resize(static_cast<Eigen::Index>(n) * nm, n * n);
  out.N = Matrix::Zero(static_cast<Eigen::Index>(n) * nm, n * n);
  Matrix blk = out.Btilde.transpose();
  const Matrix AtT = out.Atilde.transpose();
  for (int k = 0; k < n; ++k) {
    out.H.middleRows(static_cast<Eigen::Index>(k) * nm, nm) = blk;
    if (k + 1 < n) out.N.middleRows(static_cast<Eigen::Index>(k + 1) * nm, nm) = -blk;
    blk = blk * AtT;
  }
  return out;
}

std::vector<int> select_rows(const Matrix& H, int n, int m) {
  const int nm = n * m;
  const double cut = 1e-8 * H.cwiseAbs().maxCoeff();
  std::vector<int> sel;
  for (int i = 0; i < nm; ++i) sel.push_back(i);
  for (int k = 1; k < n; ++k) {
    for (int p = 0; p < nm; ++p) {
      if (static_cast<int>(sel.size()) == n * n) return sel;
      std::vector<int> cand = sel;
      cand.push_back(k * nm + p);
      if (numeric_rank_abs(rows_of(H, cand), cut) == static_cast<int>(cand.size())) sel = cand;
    }
  }
  return sel;
}

int required_g_order(const StateSpaceSystem& sys) {
  const Matrices mats = existence_matrices(sys.A, sys.B);
  const std::vector<int> sel = select_rows(mats.H, sys.n(), sys.m());
  return *std::max_element(sel.begin(), sel.end()) / (sys.n() * sys.m());
}

VectorizedSystem build_vectorized_system(const StateSpaceSystem& sys,
                                         const std::vector<std::vector<SymMatrix>>& Gk,
                                         const TimeGrid& grid) {
  const int n = sys.n();
  const int m = sys.m();
  const int nm = n * m;
  VectorizedSystem vs;
  vs.n = n;
  vs.m = m;
  vs.grid = grid;
  vs.mats = existence_matrices(sys.A, sys.B);
  if (rank_tol(vs.mats.H) != n * n) {
    throw InvalidArgument("build_vectorized_system: H is column-rank deficient (rank " +
                          std::to_string(rank_tol(vs.mats.H)) + " < " + std::to_string(n * n) +
                          "); the pair (A, B) is not controllable or is numerically degenerate");
  }
  vs.rowSelection = select_rows(vs.mats.H, n, m);
  if (static_cast<int>(vs.rowSelection.size()) != n * n) {
    throw NumericalError("build_vectorized_system: could not select n^2 independent rows");
  }
  vs.maxBlock = *std::max_element(vs.rowSelection.begin(), vs.rowSelection.end()) / nm;
  vs.Hbar = rows_of(vs.mats.H, vs.rowSelection);
  vs.Nbar = rows_of(vs.mats.N, vs.rowSelection);

  if (static_cast<int>(Gk.size()) < vs.maxBlock + 1) {
    throw InvalidArgument("build_vectorized_system: need G derivatives up to order " +
                          std::to_string(vs.maxBlock));
  }
  const int S = grid.size();
  for (int k = 0; k <= vs.maxBlock; ++k) {
    if (static_cast<int>(Gk[static_cast<std::size_t>(k)].size()) != S) {
      throw InvalidArgument("build_vectorized_system: G sample count does not match grid");
    }
  }

  // Mpow[k] = Btilde' (Atilde')^k, the k-th block of H.
  std::vector<Matrix> Mpow;
  for (int k = 0; k < n; ++k) Mpow.push_back(vs.mats.H.middleRows(static_cast<Eigen::Index>(k) * nm, nm));

  vs.fbar.reserve(static_cast<std::size_t>(S));
  vs.fbarDot.reserve(static_cast<std::size_t>(S));
  vs.vecG.reserve(static_cast<std::size_t>(S));
  std::vector<Vector> g(static_cast<std::size_t>(vs.maxBlock) + 1);
  for (int i = 0; i < S; ++i) {
    for (int k = 0; k <= vs.maxBlock; ++k) {
      g[static_cast<std::size_t>(k)] = vec(Gk[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)].matrix());
    }
    Vector f = Vector::Zero(static_cast<Eigen::Index>(n) * nm);
    Vector fd = Vector::Zero(static_cast<Eigen::Index>(n) * nm);
    for (int k = 1; k <= vs.maxBlock; ++k) {
      auto fk = f.segment(static_cast<Eigen::Index>(k) * nm, nm);
      auto fdk = fd.segment(static_cast<Eigen::Index>(k) * nm, nm);
      for (int j = 0; j < k; ++j) {
        fk -= Mpow[static_cast<std::size_t>(k - 1 - j)] * g[static_cast<std::size_t>(j)];
        fdk -= Mpow[static_cast<std::size_t>(k - 1 - j)] * g[static_cast<std::size_t>(j + 1)];
      }
    }
    vs.fbar.push_back(entries_of(f, vs.rowSelection));
    vs.fbarDot.push_back(entries_of(fd, vs.rowSelection));
    vs.vecG.push_back(g[0]);
  }
  return vs;
}

VectorizedSystem build_vectorized_system(const StateSpaceSystem& sys, const DerivedObservation& obs) {
  const int order = required_g_order(sys);
  return build_vectorized_system(sys, g_derivatives(sys, obs, order), obs.grid);
}

QLinearSystem assemble_AQ_BQ(const VectorizedSystem& vs) {
  Eigen::FullPivLU<Matrix> lu(vs.Hbar);
  if (!lu.isInvertible()) throw NumericalError("assemble_AQ_BQ: Hbar is singular");
  const Matrix HA = vs.Hbar * vs.mats.Atilde.transpose();
  QLinearSystem out;
  out.AQ = HA * lu.solve(vs.Nbar) + vs.Hbar;
  out.BQ.reserve(vs.fbar.size());
  for (std::size_t i = 0; i < vs.fbar.size(); ++i) {
    out.BQ.push_back(-HA * lu.solve(vs.fbar[i]) + vs.fbarDot[i] - vs.Hbar * vs.vecG[i]);
  }
  return out;
}

ConstancyCheck check_BQ_constancy(const std::vector<Vector>& BQ, double tol, int trim) {
  const int S = static_cast<int>(BQ.size());
  if (S < 3) throw InvalidArgument("check_BQ_constancy: need at least 3 samples");
  trim = std::clamp(trim, 0, (S - 3) / 2);
  ConstancyCheck out;
  out.mean = Vector::Zero(BQ.front().size());
  for (int i = trim; i < S - trim; ++i) out.mean += BQ[static_cast<std::size_t>(i)];
  out.mean /= static_cast<double>(S - 2 * trim);
  const double scale = 1.0 + out.mean.cwiseAbs().maxCoeff();
  for (int i = trim; i < S - trim; ++i) {
    const double dev = (BQ[static_cast<std::size_t>(i)] - out.mean).cwiseAbs().maxCoeff() / scale;
    if (dev > out.deviation) {
      out.deviation = dev;
      out.worst_index = i;
    }
  }
  out.constant = out.deviation <= tol;
  return out;
}

SymmetricSystem assemble_symmetric_system(const VectorizedSystem& vs, const Matrix& AQ,
                                          const Vector& BQmean) {
  const int n = vs.n;
  const int nn = n * n;
  const int nq = vech_size(n);
  if (AQ.rows() != nn || AQ.cols() != nn || BQmean.size() != nn) {
    throw InvalidArgument("assemble_symmetric_system: shape mismatch");
  }
  const Matrix D = duplication_matrix(n);
  SymmetricSystem out;
  out.As = Matrix::Zero(2 * nn, 2 * nq);
  out.As.topLeftCorner(nn, nq) = AQ * D;
  out.As.bottomLeftCorner(nn, nq) = vs.Nbar * D;
  out.As.bottomRightCorner(nn, nq) = vs.Hbar * D;
  out.bs.resize(2 * nn);
  out.bs.head(nn) = BQmean;
  out.bs.tail(nn) = -vs.fbar.back();
  return out;
}

int solution_dimension(int n, int m) { return (n - m) * (n - m + 1) / 2; }

Parametrization consistency_and_parametrize(const Matrix& As, const Vector& bs, int expected_r,
                                            double tol, double nullRelTol) {
  const int cols = static_cast<int>(As.cols());
  Eigen::JacobiSVD<Matrix> svd(As, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cut = std::max(nullRelTol * (s.size() ? s(0) : 0.0), kAbsFloor);
  int rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;

  Parametrization out;
  out.numeric_rank_deficiency = cols - rank;
  int r = out.numeric_rank_deficiency;
  if (expected_r >= 0 && expected_r != r) {
    out.warning = "numerical null space has dimension " + std::to_string(r) +
                  " but the structural dimension is " + std::to_string(expected_r) +
                  "; using the structural dimension";
    r = expected_r;
    rank = cols - r;
  }
  const Matrix U = svd.matrixU().leftCols(rank);
  const Vector proj = U * (U.transpose() * bs);
  out.residual = (proj - bs).norm() / (1.0 + bs.norm());
  out.consistent = out.residual <= tol;
  Vector coeff = U.transpose() * bs;
  for (int i = 0; i < rank; ++i) coeff(i) /= s(i);
  out.particular = svd.matrixV().leftCols(rank) * coeff;
  out.nullbasis = svd.matrixV().rightCols(r);
  return out;
}

SymMatrix SolutionSpace::Q(const Vector& v) const {
  Matrix X = Q0.matrix();
  for (int i = 0; i < r; ++i) X += v(i) * Qbasis[static_cast<std::size_t>(i)].matrix();
  return SymMatrix::symmetrize(X);
}

SymMatrix SolutionSpace::F(const Vector& v) const {
  Matrix X = F0.matrix();
  for (int i = 0; i < r; ++i) X += v(i) * Ybasis[static_cast<std::size_t>(i)].matrix();
  return SymMatrix::symmetrize(X);
}

std::vector<AffineMatrixMap> SolutionSpace::pencils(double relax) const {
  AffineMatrixMap q, f;
  q.M0 = Q0.matrix() + relax * Matrix::Identity(n, n);
  f.M0 = F0.matrix() + relax * Matrix::Identity(n, n);
  for (int i = 0; i < r; ++i) {
    q.M.push_back(Qbasis[static_cast<std::size_t>(i)].matrix());
    f.M.push_back(Ybasis[static_cast<std::size_t>(i)].matrix());
  }
  return {q, f};
}

double SolutionSpace::min_eig(const Vector& v) const {
  return std::min(min_eig_sym(Q(v)), min_eig_sym(F(v)));
}

SolutionSpace make_solution_space(const Parametrization& par, int n, const SymMatrix& P0T) {
  const int nq = vech_size(n);
  SolutionSpace sp;
  sp.n = n;
  sp.r = static_cast<int>(par.nullbasis.cols());
  sp.Q0 = unvech(par.particular.head(nq), n);
  sp.F0 = P0T + unvech(par.particular.tail(nq), n);
  for (int i = 0; i < sp.r; ++i) {
    Vector q = par.nullbasis.col(i).head(nq);
    Vector y = par.nullbasis.col(i).tail(nq);
    SymMatrix Qi = unvech(q, n);
    double scale = Qi.matrix().norm();
    if (scale <= kAbsFloor) scale = 1.0;
    // Fix the sign so that the largest-magnitude entry of the Q direction is positive.
    Eigen::Index imax = 0;
    q.cwiseAbs().maxCoeff(&imax);
    if (q(imax) < 0) scale = -scale;
    sp.Qbasis.push_back(unvech(q / scale, n));
    sp.Ybasis.push_back(unvech(y / scale, n));
  }
  return sp;
}

LmiFeasibility lmi_feasibility(SolutionSpace& space, double intervalTol) {
  LmiFeasibility out;
  if (space.r == 0) {
    out.v = Vector(0);
    out.slack = space.min_eig(out.v);
    out.feasible = out.slack >= -kSlackFeasTol;
    out.status = ConicStatus::optimal;
    return out;
  }
  const SlackResult sr = max_slack_feasibility(space.pencils());
  out.slack = sr.t;
  out.v = sr.x;
  out.capped = sr.capped;
  out.status = sr.status;
  out.feasible = sr.status != ConicStatus::failed && sr.feasible();
  if (!out.feasible || space.r != 1) return out;

  // r = 1: the feasible set is an interval; bisect each end from the max-slack point.
  const double seed = sr.x(0);
  auto feasible_at = [&](double a) {
    return space.min_eig(Vector::Constant(1, a)) >= -kSlackFeasTol;
  };
  double ends[2] = {seed, seed};
  bool unbounded[2] = {false, false};
  for (int side = 0; side < 2; ++side) {
    const double dir = side == 0 ? -1.0 : 1.0;
    double inside = 0.0;
    double step = 1e-3 * (1.0 + std::abs(seed));
    while (feasible_at(seed + dir * step)) {
      inside = step;
      step *= 2.0;
      if (step > kSlackCap) {
        unbounded[side] = true;
        break;
      }
    }
    double outside = step;
    if (!unbounded[side]) {
      while (outside - inside > intervalTol * (1.0 + std::abs(seed) + outside)) {
        const double mid = 0.5 * (inside + outside);
        if (feasible_at(seed + dir * mid)) inside = mid;
        else outside = mid;
      }
    }
    ends[side] = seed + dir * inside;
  }
  space.interval = std::make_pair(ends[0], ends[1]);
  space.lower_unbounded = unbounded[0];
  space.upper_unbounded = unbounded[1];
  return out;
}

StructuralBasis solution_space_structure(const StateSpaceSystem& sys) {
  const int n = sys.n();
  const int m = sys.m();
  StructuralBasis out;
  Eigen::JacobiSVD<Matrix> svd(sys.B.transpose(), Eigen::ComputeFullV);
  out.V2 = svd.matrixV().rightCols(n - m);
  for (const Matrix& X : symmetric_basis(n - m)) {
    const Matrix dP = out.V2 * X * out.V2.transpose();
    out.dQ.push_back(SymMatrix::symmetrize(-(sys.A.transpose() * dP + dP * sys.A)));
    out.dF.push_back(SymMatrix::symmetrize(dP));
  }
  return out;
}

MinConditionResult min_condition_number(const SolutionSpace& space) {
  const int n = space.n;
  const int r = space.r;
  const double relax = 1e-8 * (1.0 + space.Q0.matrix().norm());
  ConicProblem p;
  p.dim = r + 1;
  p.f = Vector::Zero(r + 1);
  p.f(r) = 1.0;
  auto pen = space.pencils(relax);
  AffineMatrixMap upper;
  upper.M0 = -space.Q0.matrix();
  for (int i = 0; i < r; ++i) upper.M.push_back(-space.Qbasis[static_cast<std::size_t>(i)].matrix());
  upper.M.push_back(Matrix::Identity(n, n));
  for (auto& m : pen) m.M.push_back(Matrix::Zero(n, n));
  p.lmis = {upper, pen[0], pen[1]};

  const ConicSolution sol = solve(p);
  MinConditionResult out;
  out.status = sol.status;
  if (sol.status == ConicStatus::infeasible || sol.status == ConicStatus::failed) {
    throw NumericalError("min_condition_number: solution space is empty or the solver failed (" +
                         std::string(to_string(sol.status)) + ")");
  }
  out.v = sol.x.head(r);
  out.alpha = sol.x(r);
  out.Q = space.Q(out.v);
  out.F = space.F(out.v);
  return out;
}

UniquenessCertificate uniqueness_certificate(const SymMatrix& Qbar,
                                             const std::vector<SymMatrix>& basis) {
  const int n = Qbar.order();
  const int r = static_cast<int>(basis.size());
  const double qn = Qbar.matrix().norm();
  UniquenessCertificate out;
  out.Xstar = SymMatrix::zero(n);
  if (r == 0) {
    out.unique = true;
    out.conclusive = true;
    out.reason = "the solution family is zero-dimensional";
    return out;
  }
  if (qn <= 1e-10) {
    out.unique = true;
    out.conclusive = true;
    out.reason = "Q = 0 is feasible";
    return out;
  }
  if (min_eig_sym(Qbar) > 1e-8 * (1.0 + qn)) {
    out.unique = false;
    out.conclusive = true;
    out.reason = "Q is positive definite, so a neighbourhood of it along the family stays feasible";
    return out;
  }

  // min tr(Qbar X) s.t. tr(dQ_i X) = 0, tr X = 1, X PSD; X = mat(D x).
  const int d = vech_size(n);
  const std::vector<Matrix> E = symmetric_basis(n);
  ConicProblem p;
  p.dim = d;
  p.f.resize(d);
  p.E.resize(r + 1, d);
  p.h = Vector::Zero(r + 1);
  p.h(r) = 1.0;
  AffineMatrixMap X;
  X.M0 = Matrix::Zero(n, n);
  for (int j = 0; j < d; ++j) {
    // symmetric_basis doubles the diagonal; undo that for the X coordinates.
    Matrix Ej = E[static_cast<std::size_t>(j)];
    if (Ej.diagonal().sum() > 0) Ej /= 2.0;
    X.M.push_back(Ej);
    p.f(j) = frob_dot(Qbar.matrix(), Ej);
    for (int i = 0; i < r; ++i) p.E(i, j) = frob_dot(basis[static_cast<std::size_t>(i)].matrix(), Ej);
    p.E(r, j) = Ej.trace();
  }
  p.lmis = {X};
  const ConicSolution sol = solve(p);
  if (sol.status != ConicStatus::optimal && sol.status != ConicStatus::inaccurate) {
    out.reason = "normalized certificate SDP has no solution (" + std::string(to_string(sol.status)) + ")";
    return out;
  }
  out.Xstar = SymMatrix::symmetrize(X.eval(sol.x));
  if (sol.objective > 1e-5 * (1.0 + qn)) {
    out.reason = "no nonzero X with tr(QX) = 0 exists; the certificate does not apply";
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(out.Xstar.matrix());
  const Vector ev = es.eigenvalues();
  const double emax = ev(n - 1);
  out.l = 0;
  for (int i = 0; i < n; ++i) {
    if (ev(i) > 1e-6 * emax) ++out.l;
  }
  // Eigenvalues ascend, so the zero block sits in the leading columns.
  const Matrix V0 = es.eigenvectors().leftCols(n - out.l);
  std::vector<Matrix> T;
  for (const Matrix& W : symmetric_basis(n - out.l)) T.push_back(V0 * W * V0.transpose());

  const int t = static_cast<int>(T.size());
  if (t == 0) {
    out.tangent_intersection_dim = 0;
  } else {
    Matrix MT(n * n, t), MS(n * n, r);
    for (int i = 0; i < t; ++i) MT.col(i) = vec(T[static_cast<std::size_t>(i)]);
    for (int i = 0; i < r; ++i) MS.col(i) = vec(basis[static_cast<std::size_t>(i)].matrix());
    const Matrix QT = Eigen::HouseholderQR<Matrix>(MT).householderQ() * Matrix::Identity(n * n, t);
    const Matrix QS = Eigen::HouseholderQR<Matrix>(MS).householderQ() * Matrix::Identity(n * n, r);
    Eigen::JacobiSVD<Matrix> svd(QT.transpose() * QS);
    const Vector c = svd.singularValues();
    int dim = 0;
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      if (c(i) > std::cos(1e-4)) ++dim;
    }
    out.tangent_intersection_dim = dim;
  }
  out.conclusive = true;
  out.unique = out.tangent_intersection_dim == 0;
  out.reason = out.unique ? "tangent space meets the family directions only at zero"
                          : "tangent space intersects the family directions";
  if (!out.unique) out.conclusive = false;
  return out;
}

Membership membership_test(const SymMatrix& Q, const SolutionSpace& space, double tol) {
  const int n = space.n;
  if (Q.order() != n) throw InvalidArgument("membership_test: order mismatch");
  Membership out;
  const Vector target = vec(Q.matrix() - space.Q0.matrix());
  if (space.r == 0) {
    out.v = Vector(0);
    out.residual = target.norm();
  } else {
    Matrix Bm(n * n, space.r);
    for (int i = 0; i < space.r; ++i) Bm.col(i) = vec(space.Qbasis[static_cast<std::size_t>(i)].matrix());
    out.v = Bm.colPivHouseholderQr().solve(target);
    out.residual = (Bm * out.v - target).norm();
  }
  out.residual /= (1.0 + Q.matrix().norm());
  out.F = space.F(out.v);
  out.min_eig_Q = min_eig_sym(Q);
  out.min_eig_F = min_eig_sym(out.F);
  out.member = out.residual <= tol && out.min_eig_Q >= -tol * (1.0 + Q.matrix().norm()) &&
               out.min_eig_F >= -tol * (1.0 + out.F.matrix().norm());
  return out;
}

bool indefinite_delta_check(const SymMatrix& Q1, const SymMatrix& Q2, double tol) {
  const SymMatrix d = Q1 - Q2;
  return min_eig_sym(d) < -tol && max_eig_sym(d) > tol;
}

Reparametrized reparametrize_interval(const SolutionSpace& space, const SymMatrix& Qref,
                                      const SymMatrix& dQ) {
  if (space.r != 1 || !space.interval) {
    throw InvalidArgument("reparametrize_interval: needs a one-dimensional family with an interval");
  }
  const Matrix& Q1 = space.Qbasis.front().matrix();
  const double qq = frob_dot(Q1, Q1);
  const Matrix off = Qref.matrix() - space.Q0.matrix();
  const double vref = frob_dot(off, Q1) / qq;
  const double c = frob_dot(dQ.matrix(), Q1) / qq;
  Reparametrized out;
  out.offset_residual = (off - vref * Q1).norm() / (1.0 + Qref.matrix().norm());
  out.direction_residual = (dQ.matrix() - c * Q1).norm() / dQ.matrix().norm();
  double a = (space.interval->first - vref) / c;
  double b = (space.interval->second - vref) / c;
  if (a > b) std::swap(a, b);
  out.lo = a;
  out.hi = b;
  return out;
}

std::vector<SymMatrix> reconstruct_Y(const VectorizedSystem& vs, const SymMatrix& Q) {
  Eigen::FullPivLU<Matrix> lu(vs.Hbar);
  const Vector nq = vs.Nbar * vec(Q.matrix());
  std::vector<SymMatrix> out;
  out.reserve(vs.fbar.size());
  for (const auto& f : vs.fbar) out.push_back(SymMatrix::symmetrize(mat(lu.solve(-f - nq), vs.n)));
  return out;
}

ExactRecovery recover_exact(const StateSpaceSystem& sys, const FeedbackTrajectory& K,
                            const ExactOptions& opt) {
  ExactRecovery rec;
  ExistenceReport& rep = rec.report;
  rep.jameson = jameson_conditions(sys, K, opt.tol_jameson);
  if (!rep.jameson.passed()) {
    rep.diagnostics.push_back("Jameson conditions fail at grid index " +
                              std::to_string(rep.jameson.worst_index));
  }
  if (!rep.jameson.rank_match) {
    rep.diagnostics.push_back("rank(KB) != rank(K); P0 is undefined");
    return rec;
  }
  rec.obs = compute_P0(sys, K);
  const int order = required_g_order(sys);
  const auto Gk = g_derivatives(sys, rec.obs, order);
  rec.obs.G = Gk.front();
  rec.vsys = build_vectorized_system(sys, Gk, rec.obs.grid);

  const QLinearSystem ql = assemble_AQ_BQ(*rec.vsys);
  rep.constancy = check_BQ_constancy(ql.BQ, opt.tol_constancy, opt.trim);
  if (!rep.constancy.constant) {
    rep.diagnostics.push_back("B_Q is not constant over the horizon (deviation " +
                              std::to_string(rep.constancy.deviation) + ")");
  }
  const SymmetricSystem ss = assemble_symmetric_system(*rec.vsys, ql.AQ, rep.constancy.mean);
  const int r = solution_dimension(sys.n(), sys.m());
  const Parametrization par =
      consistency_and_parametrize(ss.As, ss.bs, r, opt.tol_consistency, opt.null_rel_tol);
  rep.consistent = par.consistent;
  rep.consistency_residual = par.residual;
  if (!par.warning.empty()) rep.diagnostics.push_back(par.warning);
  if (!par.consistent) {
    rep.diagnostics.push_back("symmetric system is inconsistent (residual " +
                              std::to_string(par.residual) + ")");
  }
  if (!rep.jameson.passed() || !rep.constancy.constant || !par.consistent) return rec;

  rec.space = make_solution_space(par, sys.n(), rec.obs.P0T);
  rep.lmi = lmi_feasibility(*rec.space);
  if (!rep.lmi.feasible) {
    rep.diagnostics.push_back("no parameter makes both Q and F positive semidefinite (slack " +
                              std::to_string(rep.lmi.slack) + ")");
  }
  return rec;
}

}  // namespace invlqr
