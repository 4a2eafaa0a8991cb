#include "invlqr/reference_problems.hpp"

namespace invlqr {

namespace {

Matrix mk(int r, int c, std::initializer_list<double> v) {
  Matrix M(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) M(i, j) = *it++;
  }
  return M;
}

SymMatrix sym(int n, std::initializer_list<double> v) { return SymMatrix(mk(n, n, v)); }

}  // namespace

ReferenceProblem example1() {
  ReferenceProblem p;
  p.name = "example1";
  p.A = mk(2, 2, {2, 1, 0, -1});
  p.B = mk(2, 1, {0, 1});
  p.Q = sym(2, {4, 2, 2, 1});
  p.F = SymMatrix::identity(2);
  p.x0 = Vector::Zero(2);
  p.unique = true;
  return p;
}

ReferenceProblem example2() {
  ReferenceProblem p = example1();
  p.name = "example2";
  p.Q = sym(2, {0, 0, 0, 2});
  // Large enough terminal weight that only Q bounds the family.
  p.F = SymMatrix(10.0 * Matrix::Identity(2, 2));
  p.dQ = sym(2, {4, 1, 1, 0});
  p.alpha_interval = std::make_pair(0.0, 8.0);
  p.unique = false;
  return p;
}

ReferenceProblem example3() {
  ReferenceProblem p;
  p.name = "example3";
  p.A = mk(3, 3, {1, -1, 1, 0, 2, -1, 0, 0, 3});
  p.B = mk(3, 2, {1, 0, 0, 1, 0, 1});
  p.Q = sym(3, {0, 0, 0, 0, 2, 0, 0, 0, 1});
  p.F = sym(3, {1, 0, 0, 0, 7, -6, 0, -6, 7});
  p.dQ = sym(3, {0, 0, 0, 0, 2, -3, 0, -3, 4});
  p.alpha_interval = std::make_pair(-0.2, 10.2);
  p.unique = false;
  return p;
}

ReferenceProblem case_study() {
  ReferenceProblem p;
  p.name = "case-study-exact";
  p.A = mk(3, 3, {1, 0, 1, -2, -3, -1, 0, 0, 2});
  p.B = mk(3, 2, {1, 0, 0, 1, 0, 1});
  p.Q = sym(3, {4, -1, 2, -1, 2, -2, 2, -2, 3});
  p.F = sym(3, {3, -1, 0, -1, 2, -1, 0, -1, 1});
  p.x0 = (Vector(3) << 1, -0.5, 0).finished();
  p.dQ = sym(3, {0, -1, 1, -1, -3, 0, 1, 0, 3});
  p.dF = sym(3, {0, 0, 0, 0, -0.5, 0.5, 0, 0.5, -0.5});
  p.alpha_interval = std::make_pair(-0.49, 0.33);
  p.min_condition_Q = sym(3, {4.0000, -0.5097, 1.5097, -0.5097, 3.4708, -2.0000, 1.5097, -2.0000, 1.5292});
  p.unique = false;
  return p;
}

ReferenceProblem case_study_noisy() {
  ReferenceProblem p = case_study();
  p.name = "case-study-noisy";
  p.snr_db = 20.0;
  p.approx_Q = sym(3, {3.9950, -0.8847, 1.8707, -0.8847, 2.3580, -1.9989, 1.8707, -1.9989, 2.6441});
  p.approx_F = sym(3, {3.0015, -1.0024, -0.0023, -1.0024, 2.0511, -1.0411, -0.0023, -1.0411, 1.0351});
  p.approx_residual = 0.0312;
  p.approx_max_gain_error = 0.2280;
  p.approx_max_state_error = 0.0296;
  return p;
}

const std::vector<std::string>& reference_problem_names() {
  static const std::vector<std::string> names = {"example1", "example2", "example3",
                                                 "case-study-exact", "case-study-noisy"};
  return names;
}

std::optional<ReferenceProblem> reference_problem(const std::string& name) {
  if (name == "example1") return example1();
  if (name == "example2") return example2();
  if (name == "example3") return example3();
  if (name == "case-study-exact") return case_study();
  if (name == "case-study-noisy") return case_study_noisy();
  return std::nullopt;
}

}  // namespace invlqr
