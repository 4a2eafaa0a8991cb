#include "invlqr/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>

namespace invlqr {

Matrix AffineMatrixMap::eval(const Vector& x) const {
  Matrix out = M0;
  for (std::size_t j = 0; j < M.size(); ++j) out += x(static_cast<Eigen::Index>(j)) * M[j];
  return out;
}

void ConicProblem::validate() const {
  if (dim < 0) throw InvalidArgument("ConicProblem: negative dimension");
  if (H.size() && (H.rows() != dim || H.cols() != dim)) {
    throw InvalidArgument("ConicProblem: H must be dim x dim");
  }
  if (f.size() && f.size() != dim) throw InvalidArgument("ConicProblem: f length");
  if (E.rows() != h.size() || (E.rows() && E.cols() != dim)) {
    throw InvalidArgument("ConicProblem: equality shapes");
  }
  for (const auto& m : lmis) {
    if (m.dim() != dim) throw InvalidArgument("ConicProblem: LMI coefficient count");
    require_square(m.M0, "ConicProblem LMI");
    const double tol = kSymTol * (1.0 + m.M0.norm());
    if ((m.M0 - m.M0.transpose()).norm() > tol) {
      throw InvalidArgument("ConicProblem: LMI constant not symmetric");
    }
    for (const auto& c : m.M) {
      if (c.rows() != m.M0.rows() || c.cols() != m.M0.cols()) {
        throw InvalidArgument("ConicProblem: LMI coefficient shape");
      }
      if ((c - c.transpose()).norm() > kSymTol * (1.0 + c.norm())) {
        throw InvalidArgument("ConicProblem: LMI coefficient not symmetric");
      }
    }
  }
  require_finite(H, "ConicProblem H");
  require_finite(f, "ConicProblem f");
  require_finite(E, "ConicProblem E");
}

double ConicProblem::objective(const Vector& x) const {
  double v = g;
  if (H.size()) v += x.dot(H * x);
  if (f.size()) v += f.dot(x);
  return v;
}

double ConicProblem::max_violation(const Vector& x) const {
  double worst = 0.0;
  for (const auto& m : lmis) {
    if (m.order() == 0) continue;
    worst = std::max(worst, -min_eig_sym(SymMatrix::symmetrize(m.eval(x))));
  }
  return worst;
}

std::string_view to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::optimal: return "optimal";
    case ConicStatus::infeasible: return "infeasible";
    case ConicStatus::inaccurate: return "inaccurate";
    case ConicStatus::failed: return "failed";
  }
  return "failed";
}

namespace {

using Blocks = std::vector<Matrix>;

double bdot(const Blocks& a, const Blocks& b) {
  double v = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) v += a[k].cwiseProduct(b[k]).sum();
  return v;
}

double bnorm(const Blocks& a) { return std::sqrt(bdot(a, a)); }

Matrix sym(const Matrix& X) { return 0.5 * (X + X.transpose()); }

// Square-root factor L with L L' = X for X positive definite.
Matrix sqrt_factor(const Matrix& X) {
  Eigen::LLT<Matrix> llt(X);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(X));
  const Vector ev = es.eigenvalues().cwiseMax(std::numeric_limits<double>::min());
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

// Nesterov-Todd scaling point: returns R, R^{-T} and lambda with
// R' Z R = R^{-1} S R^{-T} = diag(lambda).
void nt_scaling(const Matrix& S, const Matrix& Z, Matrix& R, Matrix& Rti, Vector& lambda) {
  const Matrix Ls = sqrt_factor(S);
  const Matrix Lz = sqrt_factor(Z);
  Eigen::JacobiSVD<Matrix> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
  lambda = svd.singularValues().cwiseMax(std::numeric_limits<double>::min());
  const Vector isq = lambda.cwiseSqrt().cwiseInverse();
  R = Ls * svd.matrixV() * isq.asDiagonal();
  Rti = Lz * svd.matrixU() * isq.asDiagonal();
}

// Largest alpha with diag(lambda) + alpha*D PSD (infinity when unbounded).
double max_step(const Vector& lambda, const Matrix& D) {
  const Vector isq = lambda.cwiseSqrt().cwiseInverse();
  const Matrix T = isq.asDiagonal() * D * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(T), Eigen::EigenvaluesOnly);
  const double emin = es.eigenvalues()(0);
  if (emin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / emin;
}

struct Iterate {
  Vector x, y;
  Blocks s, z;
  double score = std::numeric_limits<double>::infinity();
};

class InteriorPoint {
 public:
  InteriorPoint(const ConicProblem& p, const ConicOptions& opt) : opt_(opt) {
    d_ = p.dim;
    P_ = p.H.size() ? Matrix(p.H + p.H.transpose()) : Matrix::Zero(d_, d_);
    q_ = p.f.size() ? p.f : Vector::Zero(d_);
    reduce_equalities(p.E, p.h);
    for (const auto& m : p.lmis) {
      const int nk = m.order();
      if (nk == 0) continue;
      orders_.push_back(nk);
      h_.push_back(sym(m.M0));
      Matrix Gk(nk * nk, d_);
      for (int j = 0; j < d_; ++j) {
        const Matrix c = -sym(m.M[static_cast<std::size_t>(j)]);
        Gk.col(j) = Eigen::Map<const Vector>(c.data(), c.size());
      }
      G_.push_back(std::move(Gk));
      degree_ += nk;
    }
  }

  bool equalities_consistent() const { return eq_consistent_; }

  ConicSolution run() {
    ConicSolution out;
    const int K = static_cast<int>(orders_.size());
    const double resx0 = std::max(1.0, q_.norm());
    const double resy0 = std::max(1.0, b_.norm());
    const double resz0 = std::max(1.0, bnorm(h_));

    // Initial point from the identity-scaled KKT system.
    std::vector<Matrix> R(static_cast<std::size_t>(K)), Rti(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) Rti[k] = Matrix::Identity(orders_[k], orders_[k]);
    factor(Rti);
    Vector x, y;
    Blocks dz, dzw;
    solve_kkt(-q_, b_, h_, Rti, x, y, dzw, dz);
    Blocks s(dz.size()), z(dz.size());
    for (int k = 0; k < K; ++k) {
      s[k] = -dz[k];
      z[k] = dz[k];
    }
    shift_into_cone(s);
    shift_into_cone(z);

    std::vector<Vector> lam(static_cast<std::size_t>(K));

    Iterate best;
    bool converged = false;
    int it = 0;
    for (;; ++it) {
      const Blocks gx = Gx(x);
      Vector rx = P_ * x + q_ + GTz(z);
      if (p_) rx += A_.transpose() * y;
      const Vector ry = p_ ? Vector(A_ * x - b_) : Vector();
      Blocks rz(static_cast<std::size_t>(K));
      for (int k = 0; k < K; ++k) rz[k] = s[k] + gx[k] - h_[k];

      const double gap = bdot(s, z);
      const double pcost = 0.5 * x.dot(P_ * x) + q_.dot(x);
      const double dcost = pcost + (p_ ? y.dot(ry) : 0.0) + bdot(z, rz) - gap;
      const double pres = std::max(p_ ? ry.norm() / resy0 : 0.0, bnorm(rz) / resz0);
      const double dres = rx.norm() / resx0;
      double relgap = std::numeric_limits<double>::infinity();
      if (pcost < 0.0) relgap = gap / -pcost;
      else if (dcost > 0.0) relgap = gap / dcost;

      const double score = std::max({pres, dres, std::min(gap, relgap)});
      if (score < best.score) best = {x, y, s, z, score};
      out.iterations = it;
      out.gap = gap;
      if (std::getenv("INVLQR_IPM_TRACE")) {
        std::fprintf(stderr, "%3d pcost % .10e dcost % .10e gap %.2e pres %.2e dres %.2e\n", it, pcost,
                     dcost, gap, pres, dres);
      }

      if (pres <= opt_.feastol && dres <= opt_.feastol &&
          (gap <= opt_.abstol || relgap <= opt_.reltol)) {
        converged = true;
        best = {x, y, s, z, score};
        break;
      }
      if (K == 0 && pres <= opt_.feastol && dres <= opt_.feastol) {
        converged = true;
        best = {x, y, s, z, score};
        break;
      }
      if (it >= opt_.max_iter) break;
      if (!x.allFinite() || x.norm() > 1e13 || bnorm(z) > 1e13) break;

      if (it == 0) {
        for (int k = 0; k < K; ++k) nt_scaling(s[k], z[k], R[k], Rti[k], lam[k]);
      }
      factor(Rti);

      const double mu = K ? gap / degree_ : 0.0;
      double sigma = 0.0;
      Vector dx, dy;
      Blocks dsa(static_cast<std::size_t>(K)), dza(static_cast<std::size_t>(K));
      Blocks ds(static_cast<std::size_t>(K)), dzs(static_cast<std::size_t>(K));
      double alpha = 0.0;
      for (int pass = 0; pass < 2; ++pass) {
        Blocks t(static_cast<std::size_t>(K)), bz(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
          const int nk = orders_[k];
          Matrix rhs = -Matrix(lam[k].cwiseAbs2().asDiagonal());
          if (pass == 1) {
            rhs -= sym(dsa[k] * dza[k]);
            rhs += sigma * mu * Matrix::Identity(nk, nk);
          }
          Matrix tk(nk, nk);
          for (int i = 0; i < nk; ++i) {
            for (int j = 0; j < nk; ++j) tk(i, j) = 2.0 * rhs(i, j) / (lam[k](i) + lam[k](j));
          }
          t[k] = tk;
          bz[k] = -rz[k] - R[k] * tk * R[k].transpose();
        }
        Blocks dz_raw, dz_scaled;
        solve_kkt(-rx, p_ ? Vector(-ry) : Vector(), bz, Rti, dx, dy, dz_scaled, dz_raw);
        double amax = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
          dzs[k] = dz_scaled[k];
          ds[k] = sym(t[k] - dzs[k]);
          amax = std::min({amax, max_step(lam[k], ds[k]), max_step(lam[k], dzs[k])});
        }
        if (pass == 0) {
          const double aa = std::min(1.0, amax);
          sigma = std::pow(1.0 - aa, 3);
          dsa = ds;
          dza = dzs;
        } else {
          alpha = std::min(1.0, 0.99 * amax);
        }
      }
      if (!(alpha > 1e-12) || !dx.allFinite()) break;

      x += alpha * dx;
      if (p_) y += alpha * dy;
      for (int k = 0; k < K; ++k) {
        const Matrix st = Matrix(lam[k].asDiagonal()) + alpha * ds[k];
        const Matrix zt = Matrix(lam[k].asDiagonal()) + alpha * dzs[k];
        Matrix Rt, Rtit;
        nt_scaling(sym(st), sym(zt), Rt, Rtit, lam[k]);
        R[k] = R[k] * Rt;
        Rti[k] = Rti[k] * Rtit;
        s[k] = sym(R[k] * lam[k].asDiagonal() * R[k].transpose());
        z[k] = sym(Rti[k] * lam[k].asDiagonal() * Rti[k].transpose());
      }
    }

    out.x = best.x;
    out.Z = best.z;
    out.status = converged ? ConicStatus::optimal : ConicStatus::failed;
    if (!converged && best.score <= 1e-6) out.status = ConicStatus::inaccurate;
    return out;
  }

 private:
  void reduce_equalities(const Matrix& E, const Vector& h) {
    p_ = 0;
    if (E.rows() == 0) {
      A_ = Matrix(0, d_);
      b_ = Vector(0);
      return;
    }
    // Keep a maximal independent subset of rows.
    Eigen::ColPivHouseholderQR<Matrix> qr(E.transpose());
    qr.setThreshold(1e-10);
    const int r = static_cast<int>(qr.rank());
    A_.resize(r, d_);
    b_.resize(r);
    const auto& perm = qr.colsPermutation().indices();
    for (int i = 0; i < r; ++i) {
      A_.row(i) = E.row(perm(i));
      b_(i) = h(perm(i));
    }
    p_ = r;
    // Dropped rows must be implied by the kept ones.
    if (r < E.rows() && r > 0) {
      const Matrix C = A_.transpose().colPivHouseholderQr().solve(E.transpose());
      const Vector implied = C.transpose() * b_;
      eq_consistent_ = (implied - h).norm() <= 1e-8 * (1.0 + h.norm());
    } else if (r == 0) {
      eq_consistent_ = h.norm() <= 1e-12;
    }
  }

  Blocks Gx(const Vector& x) const {
    Blocks out(orders_.size());
    for (std::size_t k = 0; k < orders_.size(); ++k) {
      const Vector v = G_[k] * x;
      out[k] = sym(Eigen::Map<const Matrix>(v.data(), orders_[k], orders_[k]));
    }
    return out;
  }

  Vector GTz(const Blocks& z) const {
    Vector out = Vector::Zero(d_);
    for (std::size_t k = 0; k < orders_.size(); ++k) {
      out += G_[k].transpose() * Eigen::Map<const Vector>(z[k].data(), z[k].size());
    }
    return out;
  }

  void shift_into_cone(Blocks& u) const {
    double t = -std::numeric_limits<double>::infinity();
    for (const auto& b : u) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
      t = std::max(t, -es.eigenvalues()(0));
    }
    if (u.empty()) return;
    if (t >= -1e-8 * std::max(bnorm(u), 1.0)) {
      for (auto& b : u) b += (1.0 + t) * Matrix::Identity(b.rows(), b.cols());
    }
  }

  static int svec_size(int n) { return n * (n + 1) / 2; }

  static Vector svec(const Matrix& X) {
    const int n = static_cast<int>(X.rows());
    Vector v(svec_size(n));
    int k = 0;
    for (int j = 0; j < n; ++j) {
      v(k++) = X(j, j);
      for (int i = j + 1; i < n; ++i) v(k++) = std::sqrt(2.0) * 0.5 * (X(i, j) + X(j, i));
    }
    return v;
  }

  static Matrix smat(const Eigen::Ref<const Vector>& v, int n) {
    Matrix X(n, n);
    int k = 0;
    for (int j = 0; j < n; ++j) {
      X(j, j) = v(k++);
      for (int i = j + 1; i < n; ++i) {
        X(i, j) = v(k) / std::sqrt(2.0);
        X(j, i) = X(i, j);
        ++k;
      }
    }
    return X;
  }

  // Full scaled KKT matrix [P A' Gs'; A 0 0; Gs 0 -I] with Gs = W^{-T} G.
  void factor(const std::vector<Matrix>& Rti) {
    int ns = 0;
    for (int nk : orders_) ns += svec_size(nk);
    ns_ = ns;
    const int n = d_ + p_ + ns;
    kkt_.setZero(n, n);
    kkt_.topLeftCorner(d_, d_) = P_;
    if (p_) {
      kkt_.block(d_, 0, p_, d_) = A_;
      kkt_.block(0, d_, d_, p_) = A_.transpose();
    }
    int off = d_ + p_;
    for (std::size_t k = 0; k < orders_.size(); ++k) {
      const int nk = orders_[k];
      const int sk = svec_size(nk);
      Matrix Gs(sk, d_);
      for (int j = 0; j < d_; ++j) {
        const Matrix Gj = Eigen::Map<const Matrix>(G_[k].col(j).data(), nk, nk);
        Gs.col(j) = svec(Rti[k].transpose() * Gj * Rti[k]);
      }
      kkt_.block(off, 0, sk, d_) = Gs;
      kkt_.block(0, off, d_, sk) = Gs.transpose();
      kkt_.block(off, off, sk, sk) = -Matrix::Identity(sk, sk);
      off += sk;
    }
    Matrix reg = kkt_;
    const double delta = 1e-14 * std::max(1.0, kkt_.cwiseAbs().maxCoeff());
    reg.topLeftCorner(d_, d_).diagonal().array() += delta;
    if (p_) reg.block(d_, d_, p_, p_).diagonal().array() -= delta;
    lu_.compute(reg);
  }

  // Solves P ux + A'uy + G'uz = bx, A ux = by, G ux - W'W uz = bz.
  // Returns ux, uy, the scaled w = W uz and uz itself.
  void solve_kkt(const Vector& bx, const Vector& by, const Blocks& bz,
                 const std::vector<Matrix>& Rti, Vector& ux, Vector& uy, Blocks& w,
                 Blocks& uz) const {
    const int n = d_ + p_ + ns_;
    Vector rhs(n);
    rhs.head(d_) = bx;
    if (p_) rhs.segment(d_, p_) = by;
    int off = d_ + p_;
    for (std::size_t k = 0; k < orders_.size(); ++k) {
      const int sk = svec_size(orders_[k]);
      rhs.segment(off, sk) = svec(Rti[k].transpose() * bz[k] * Rti[k]);
      off += sk;
    }
    Vector u = lu_.solve(rhs);
    for (int r = 0; r < 2; ++r) {
      const Vector res = rhs - kkt_ * u;
      u += lu_.solve(res);
    }
    ux = u.head(d_);
    uy = p_ ? Vector(u.segment(d_, p_)) : Vector();
    w.resize(orders_.size());
    uz.resize(orders_.size());
    off = d_ + p_;
    for (std::size_t k = 0; k < orders_.size(); ++k) {
      const int nk = orders_[k];
      const int sk = svec_size(nk);
      w[k] = smat(u.segment(off, sk), nk);
      uz[k] = sym(Rti[k] * w[k] * Rti[k].transpose());
      off += sk;
    }
  }

  ConicOptions opt_;
  int d_ = 0;
  int p_ = 0;
  int degree_ = 0;
  int ns_ = 0;
  bool eq_consistent_ = true;
  Matrix P_;
  Vector q_;
  Matrix A_;
  Vector b_;
  std::vector<int> orders_;
  std::vector<Matrix> G_;
  Blocks h_;
  Matrix kkt_;
  Eigen::FullPivLU<Matrix> lu_;
};

ConicSolution finish(const ConicProblem& p, ConicSolution sol) {
  sol.objective = p.objective(sol.x);
  sol.max_violation = p.max_violation(sol.x);
  sol.eq_residual = p.E.rows() ? (p.E * sol.x - p.h).norm() : 0.0;
  if (sol.status == ConicStatus::optimal) {
    const bool viol_ok = sol.max_violation <= 1e-7 * (1.0 + sol.x.norm());
    const bool eq_ok = sol.eq_residual <= 1e-8 * (1.0 + p.h.norm());
    if (!viol_ok || !eq_ok) sol.status = ConicStatus::inaccurate;
  }
  return sol;
}

SlackResult slack_impl(const std::vector<AffineMatrixMap>& maps, const ConicOptions& opt) {
  if (maps.empty()) throw InvalidArgument("max_slack_feasibility: no maps");
  const int d = maps.front().dim();
  ConicProblem p;
  p.dim = d + 1;
  p.f = Vector::Zero(d + 1);
  p.f(d) = -1.0;
  for (const auto& m : maps) {
    if (m.dim() != d) throw InvalidArgument("max_slack_feasibility: inconsistent map dimensions");
    AffineMatrixMap s = m;
    s.M.push_back(-Matrix::Identity(m.order(), m.order()));
    p.lmis.push_back(std::move(s));
  }
  AffineMatrixMap cap;
  cap.M0 = Matrix::Constant(1, 1, kSlackCap);
  cap.M.assign(static_cast<std::size_t>(d), Matrix::Zero(1, 1));
  cap.M.push_back(-Matrix::Identity(1, 1));
  p.lmis.push_back(std::move(cap));

  InteriorPoint ipm(p, opt);
  ConicSolution sol = finish(p, ipm.run());
  SlackResult r;
  r.status = sol.status;
  r.x = sol.x.head(d);
  r.t = sol.x(d);
  r.capped = r.t >= kSlackCap * (1.0 - 1e-6);
  return r;
}

}  // namespace

ConicSolution solve(const ConicProblem& p, const ConicOptions& opt) {
  p.validate();
  if (p.dim == 0) {
    ConicSolution s;
    s.x = Vector(0);
    s.status = p.max_violation(s.x) <= 1e-9 ? ConicStatus::optimal : ConicStatus::infeasible;
    return finish(p, s);
  }
  InteriorPoint ipm(p, opt);
  if (!ipm.equalities_consistent()) {
    ConicSolution s;
    s.x = Vector::Zero(p.dim);
    s.status = ConicStatus::infeasible;
    return finish(p, s);
  }
  ConicSolution sol = finish(p, ipm.run());
  if (sol.status == ConicStatus::failed && !p.lmis.empty() && p.E.rows() == 0) {
    const SlackResult sr = slack_impl(p.lmis, opt);
    if (sr.status != ConicStatus::failed && !sr.feasible()) sol.status = ConicStatus::infeasible;
  }
  return sol;
}

SlackResult max_slack_feasibility(const std::vector<AffineMatrixMap>& maps,
                                  const ConicOptions& opt) {
  return slack_impl(maps, opt);
}

}  // namespace invlqr
