#include "invlqr/observation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <type_traits>

namespace invlqr {

JamesonReport jameson_conditions(const StateSpaceSystem& sys, const FeedbackTrajectory& K,
                                 double tol) {
  K.validate(sys.n(), sys.m());
  JamesonReport rep;
  rep.points.reserve(K.K.size());
  for (std::size_t i = 0; i < K.K.size(); ++i) {
    const Matrix KB = K.K[i] * sys.B;
    JamesonPoint pt;
    const double scale = 1.0 + KB.norm();
    pt.asymmetry = (KB - KB.transpose()).norm() / scale;
    pt.rank_KB = rank_tol(KB);
    pt.rank_K = rank_tol(K.K[i]);
    pt.max_eig = max_eig_sym(SymMatrix::symmetrize(KB));
    const bool sym_ok = pt.asymmetry <= tol;
    const bool rank_ok = pt.rank_KB == pt.rank_K;
    const bool eig_ok = pt.max_eig <= tol * scale;
    rep.symmetric_KB = rep.symmetric_KB && sym_ok;
    rep.rank_match = rep.rank_match && rank_ok;
    rep.eigs_nonpositive = rep.eigs_nonpositive && eig_ok;
    if (rep.worst_index < 0 && !(sym_ok && rank_ok && eig_ok)) {
      rep.worst_index = static_cast<int>(i);
    }
    rep.points.push_back(pt);
  }
  return rep;
}

DerivedObservation compute_P0(const StateSpaceSystem& sys, const FeedbackTrajectory& K) {
  K.validate(sys.n(), sys.m());
  DerivedObservation obs;
  obs.grid = K.grid;
  obs.P0.reserve(K.K.size());
  for (std::size_t i = 0; i < K.K.size(); ++i) {
    const Matrix& Ki = K.K[i];
    const Matrix KB = Ki * sys.B;
    if (rank_tol(KB) != rank_tol(Ki)) {
      throw InvalidArgument("compute_P0: rank(KB) != rank(K) at grid index " + std::to_string(i));
    }
    obs.P0.push_back(SymMatrix::symmetrize(-Ki.transpose() * pinv(KB) * Ki));
  }
  obs.P0T = obs.P0.back();
  return obs;
}

LocalPolynomialDifferentiator::LocalPolynomialDifferentiator(const TimeGrid& grid, int max_order,
                                                             int half_width, int degree)
    : samples_(grid.size()), max_order_(max_order) {
  if (grid.steps() < 4) throw InvalidArgument("derivative estimate: grid too short (need N >= 4)");
  half_ = std::min(half_width, grid.steps() / 2);
  degree_ = std::min(degree, 2 * half_);
  if (max_order > degree_) {
    throw InvalidArgument("derivative estimate: order " + std::to_string(max_order) +
                          " exceeds fit degree " + std::to_string(degree_));
  }
  const int w = 2 * half_ + 1;
  const double h = grid.step();
  weights_.resize(static_cast<std::size_t>(w));
  for (int p = 0; p < w; ++p) {
    // Local coordinate tau = (j - p) / half, polynomial in tau.
    Matrix V(w, degree_ + 1);
    for (int j = 0; j < w; ++j) {
      const double tau = static_cast<double>(j - p) / half_;
      double v = 1.0;
      for (int d = 0; d <= degree_; ++d) {
        V(j, d) = v;
        v *= tau;
      }
    }
    const Matrix C = V.colPivHouseholderQr().solve(Matrix::Identity(w, w));
    auto& row = weights_[static_cast<std::size_t>(p)];
    row.resize(static_cast<std::size_t>(max_order) + 1);
    double fact = 1.0;
    for (int k = 0; k <= max_order; ++k) {
      if (k > 0) fact *= k;
      row[static_cast<std::size_t>(k)] = (fact / std::pow(half_ * h, k)) * C.row(k).transpose();
    }
  }
}

template <class Sample>
Matrix LocalPolynomialDifferentiator::apply(const std::vector<Sample>& x, int i, int k) const {
  if (static_cast<int>(x.size()) != samples_) {
    throw InvalidArgument("derivative estimate: sample count mismatch");
  }
  const int w = 2 * half_ + 1;
  const int start = std::clamp(i - half_, 0, samples_ - w);
  const Vector& wt = weights_[static_cast<std::size_t>(i - start)][static_cast<std::size_t>(k)];
  const auto value = [&](int j) -> const Matrix& {
    if constexpr (std::is_same_v<Sample, SymMatrix>) {
      return x[static_cast<std::size_t>(j)].matrix();
    } else {
      return x[static_cast<std::size_t>(j)];
    }
  };
  Matrix out = Matrix::Zero(value(start).rows(), value(start).cols());
  for (int j = 0; j < w; ++j) out += wt(j) * value(start + j);
  return out;
}

Matrix LocalPolynomialDifferentiator::derivative(const std::vector<SymMatrix>& x, int i,
                                                 int k) const {
  return apply(x, i, k);
}

Matrix LocalPolynomialDifferentiator::derivative(const std::vector<Matrix>& x, int i, int k) const {
  return apply(x, i, k);
}

std::vector<SymMatrix> LocalPolynomialDifferentiator::derivative(const std::vector<SymMatrix>& x,
                                                                 int k) const {
  std::vector<SymMatrix> out;
  out.reserve(x.size());
  for (int i = 0; i < samples_; ++i) out.push_back(SymMatrix::symmetrize(derivative(x, i, k)));
  return out;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}


// dP[k][i] = P0^(k)(t_i). With Z = KB invertible, P0 = -U'ZU where U = Z^{-1}K and
// W = Z^{-1} stay smooth where P escapes to infinity, so U and W are differentiated
// and the derivatives of Z follow from ZW = I.
std::vector<std::vector<Matrix>> p0_derivatives(const StateSpaceSystem& sys,
                                                const DerivedObservation& obs,
                                                const LocalPolynomialDifferentiator& diff,
                                                int order) {
  const int S = obs.grid.size();
  const auto sz = [](int k) { return static_cast<std::size_t>(k); };
  std::vector<std::vector<Matrix>> dP(sz(order) + 1, std::vector<Matrix>(sz(S)));
  std::vector<Matrix> K(sz(S)), W(sz(S)), U(sz(S));
  bool regular = true;
  for (int i = 0; i < S && regular; ++i) {
    K[sz(i)] = -sys.B.transpose() * obs.P0[sz(i)].matrix();
    const Matrix Z = K[sz(i)] * sys.B;
    Eigen::JacobiSVD<Matrix> svd(Z);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) <= 1e-10 * s(0)) {
      regular = false;
      break;
    }
    W[sz(i)] = Z.inverse();
    U[sz(i)] = W[sz(i)] * K[sz(i)];
  }
  if (!regular) {
    for (int i = 0; i < S; ++i) {
      dP[0][sz(i)] = obs.P0[sz(i)].matrix();
      for (int k = 1; k <= order; ++k) dP[sz(k)][sz(i)] = diff.derivative(obs.P0, i, k);
    }
    return dP;
  }
  const int m = sys.m();
  std::vector<Matrix> u(sz(order) + 1), w(sz(order) + 1), z(sz(order) + 1);
  for (int i = 0; i < S; ++i) {
    u[0] = U[sz(i)];
    w[0] = W[sz(i)];
    z[0] = K[sz(i)] * sys.B;
    for (int k = 1; k <= order; ++k) {
      u[sz(k)] = diff.derivative(U, i, k);
      w[sz(k)] = diff.derivative(W, i, k);
      Matrix acc = Matrix::Zero(m, m);
      for (int j = 0; j < k; ++j) acc += binomial(k, j) * z[sz(j)] * w[sz(k - j)];
      z[sz(k)] = -acc * z[0];
    }
    for (int k = 0; k <= order; ++k) {
      Matrix acc = Matrix::Zero(sys.n(), sys.n());
      for (int a = 0; a <= k; ++a) {
        for (int b = 0; a + b <= k; ++b) {
          acc += binomial(k, a) * binomial(k - a, b) * u[sz(a)].transpose() * z[sz(b)] * u[sz(k - a - b)];
        }
      }
      dP[sz(k)][sz(i)] = k == 0 ? obs.P0[sz(i)].matrix() : Matrix(-acc);
    }
  }
  return dP;
}

}  // namespace

std::vector<std::vector<SymMatrix>> g_derivatives(const StateSpaceSystem& sys,
                                                  const DerivedObservation& obs, int max_order) {
  if (obs.P0.empty()) throw InvalidArgument("g_derivatives: P0 not computed");
  const LocalPolynomialDifferentiator diff(obs.grid, max_order + 1);
  const auto dP = p0_derivatives(sys, obs, diff, max_order + 1);
  const int S = obs.grid.size();
  const Matrix BBt = sys.B * sys.B.transpose();
  std::vector<std::vector<SymMatrix>> G(static_cast<std::size_t>(max_order) + 1);
  for (int k = 0; k <= max_order; ++k) {
    auto& out = G[static_cast<std::size_t>(k)];
    out.reserve(static_cast<std::size_t>(S));
    for (int i = 0; i < S; ++i) {
      const Matrix& Pk = dP[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      Matrix g = dP[static_cast<std::size_t>(k) + 1][static_cast<std::size_t>(i)] +
                 sys.A.transpose() * Pk + Pk * sys.A;
      // Leibniz rule for the quadratic term.
      for (int j = 0; j <= k; ++j) {
        g -= binomial(k, j) * dP[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * BBt *
             dP[static_cast<std::size_t>(k - j)][static_cast<std::size_t>(i)];
      }
      out.push_back(SymMatrix::symmetrize(g));
    }
  }
  return G;
}

DerivedObservation compute_G(const StateSpaceSystem& sys, DerivedObservation obs) {
  obs.G = g_derivatives(sys, obs, 0).front();
  return obs;
}

double noise_variance(const FeedbackTrajectory& K, double snr_db) {
  double power = 0.0;
  std::size_t count = 0;
  for (const auto& k : K.K) {
    power += k.squaredNorm();
    count += static_cast<std::size_t>(k.size());
  }
  if (count == 0) return 0.0;
  power /= static_cast<double>(count);
  return power / std::pow(10.0, snr_db / 10.0);
}

FeedbackTrajectory add_noise(const FeedbackTrajectory& K, double snr_db, std::uint64_t seed) {
  if (std::isnan(snr_db)) throw InvalidArgument("add_noise: SNR is NaN");
  if (std::isinf(snr_db) && snr_db > 0) return K;
  if (std::isinf(snr_db)) throw InvalidArgument("add_noise: SNR must not be -inf");
  const double sigma = std::sqrt(noise_variance(K, snr_db));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  FeedbackTrajectory out = K;
  for (auto& k : out.K) {
    for (Eigen::Index c = 0; c < k.cols(); ++c) {
      for (Eigen::Index r = 0; r < k.rows(); ++r) k(r, c) += sigma * dist(rng);
    }
  }
  return out;
}

}  // namespace invlqr
