#pragma once

#include <cstdint>
#include <vector>

#include "invlqr/lqr_forward.hpp"
#include "invlqr/matkit.hpp"
#include "invlqr/trajectory.hpp"

namespace invlqr {

struct JamesonPoint {
  double asymmetry = 0.0;  // ||KB - (KB)'|| / (1 + ||KB||)
  int rank_KB = 0;
  int rank_K = 0;
  double max_eig = 0.0;  // of sym(KB)
};

struct JamesonReport {
  bool symmetric_KB = true;
  bool rank_match = true;
  bool eigs_nonpositive = true;
  int worst_index = -1;  // first failing grid index, -1 if none
  std::vector<JamesonPoint> points;

  bool passed() const { return symmetric_KB && rank_match && eigs_nonpositive; }
};

JamesonReport jameson_conditions(const StateSpaceSystem& sys, const FeedbackTrajectory& K,
                                 double tol = 1e-8);

struct DerivedObservation {
  TimeGrid grid;
  std::vector<SymMatrix> P0;
  std::vector<SymMatrix> G;
  SymMatrix P0T;
};

// P0 = -K'(KB)^+ K per sample; throws when rank(KB) != rank(K).
DerivedObservation compute_P0(const StateSpaceSystem& sys, const FeedbackTrajectory& K);

// Derivatives of uniformly sampled data by least-squares polynomial fits on a
// sliding window; the window slides inward at the ends of the grid.
class LocalPolynomialDifferentiator {
 public:
  LocalPolynomialDifferentiator(const TimeGrid& grid, int max_order, int half_width = 20,
                                int degree = 10);

  int half_width() const { return half_; }
  int degree() const { return degree_; }
  int max_order() const { return max_order_; }

  // k-th derivative at sample i.
  Matrix derivative(const std::vector<SymMatrix>& x, int i, int k) const;
  Matrix derivative(const std::vector<Matrix>& x, int i, int k) const;
  std::vector<SymMatrix> derivative(const std::vector<SymMatrix>& x, int k) const;

 private:
  template <class Sample>
  Matrix apply(const std::vector<Sample>& x, int i, int k) const;

  int samples_ = 0;
  int half_ = 0;
  int degree_ = 0;
  int max_order_ = 0;
  // weights_[p][k]: window weights when the evaluation point sits at offset p.
  std::vector<std::vector<Vector>> weights_;
};

// G = P0' + A'P0 + P0 A - P0 B B' P0.
DerivedObservation compute_G(const StateSpaceSystem& sys, DerivedObservation obs);

// G and its time derivatives up to max_order; result[k][i] = G^(k)(t_i).
std::vector<std::vector<SymMatrix>> g_derivatives(const StateSpaceSystem& sys,
                                                  const DerivedObservation& obs, int max_order);

// Adds white Gaussian noise at the given SNR in dB; +inf leaves K untouched.
FeedbackTrajectory add_noise(const FeedbackTrajectory& K, double snr_db, std::uint64_t seed);

double noise_variance(const FeedbackTrajectory& K, double snr_db);

}  // namespace invlqr
