#pragma once

#include <string_view>
#include <vector>

#include "invlqr/matkit.hpp"

namespace invlqr {

// x -> M0 + sum_j x_j M[j]; every coefficient symmetric.
struct AffineMatrixMap {
  Matrix M0;
  std::vector<Matrix> M;

  int order() const { return static_cast<int>(M0.rows()); }
  int dim() const { return static_cast<int>(M.size()); }
  Matrix eval(const Vector& x) const;
};

// minimize x'Hx + f'x + g  s.t.  E x = h,  lmis[k](x) PSD.
struct ConicProblem {
  int dim = 0;
  Matrix H;  // empty means zero
  Vector f;  // empty means zero
  double g = 0.0;
  Matrix E;
  Vector h;
  std::vector<AffineMatrixMap> lmis;

  void validate() const;
  double objective(const Vector& x) const;
  double max_violation(const Vector& x) const;
};

enum class ConicStatus { optimal, infeasible, inaccurate, failed };
std::string_view to_string(ConicStatus s);

struct ConicOptions {
  double abstol = 1e-10;
  double reltol = 1e-9;
  double feastol = 1e-10;
  int max_iter = 150;
};

struct ConicSolution {
  Vector x;
  double objective = 0.0;
  ConicStatus status = ConicStatus::failed;
  double max_violation = 0.0;
  double eq_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  // Dual multipliers of the LMIs (PSD), one per map.
  std::vector<Matrix> Z;
};

ConicSolution solve(const ConicProblem& p, const ConicOptions& opt = {});

inline constexpr double kSlackCap = 1e6;
inline constexpr double kSlackFeasTol = 1e-7;

struct SlackResult {
  double t = 0.0;
  Vector x;
  bool capped = false;
  ConicStatus status = ConicStatus::failed;
  bool feasible() const { return t >= -kSlackFeasTol; }
};

// maximize t s.t. maps[k](x) - t I PSD for all k, t <= kSlackCap.
SlackResult max_slack_feasibility(const std::vector<AffineMatrixMap>& maps,
                                  const ConicOptions& opt = {});

}  // namespace invlqr
