#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invlqr/lqr_forward.hpp"
#include "invlqr/matkit.hpp"

namespace invlqr {

// Benchmark problems with their reference solution families
// Q = Qref + alpha * dQ, alpha in [lo, hi].
struct ReferenceProblem {
  std::string name;
  Matrix A;
  Matrix B;
  SymMatrix Q;
  SymMatrix F;
  double T = 1.0;
  int N = 1000;
  std::optional<Vector> x0;

  std::optional<SymMatrix> dQ;
  std::optional<SymMatrix> dF;
  std::optional<std::pair<double, double>> alpha_interval;
  std::optional<SymMatrix> min_condition_Q;
  std::optional<bool> unique;
  // Approximate-path reference values for noisy data.
  std::optional<SymMatrix> approx_Q;
  std::optional<SymMatrix> approx_F;
  std::optional<double> approx_residual;
  std::optional<double> approx_max_gain_error;
  std::optional<double> approx_max_state_error;
  std::optional<double> snr_db;

  StateSpaceSystem system() const { return StateSpaceSystem::make(A, B); }
  QuadraticCost cost() const { return QuadraticCost::make(Q, F, T); }
};

ReferenceProblem example1();
ReferenceProblem example2();
ReferenceProblem example3();
// Three-state, two-input plant with a one-parameter solution family.
ReferenceProblem case_study();
// Same plant, gain observed at 20 dB SNR.
ReferenceProblem case_study_noisy();

const std::vector<std::string>& reference_problem_names();
std::optional<ReferenceProblem> reference_problem(const std::string& name);

}  // namespace invlqr
