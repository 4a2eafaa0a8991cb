#include <random>

#include "doctest.h"
#include "invlqr/sdp.hpp"
#include "support.hpp"

using namespace invlqr;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

AffineMatrixMap scalar_map(double c0, std::vector<double> c) {
  AffineMatrixMap m{scalar(c0), {}};
  for (double v : c) m.M.push_back(scalar(v));
  return m;
}

}  // namespace

TEST_CASE("scalar linear program") {
  ConicProblem p;
  p.dim = 1;
  p.f = Vector::Ones(1);
  p.lmis.push_back(scalar_map(0.0, {1.0}));
  const auto s = solve(p);
  REQUIRE(s.status == ConicStatus::optimal);
  CHECK(std::abs(s.x(0)) <= 1e-7);
  CHECK(std::abs(s.objective) <= 1e-7);
}

TEST_CASE("largest eigenvalue as an SDP") {
  // min a s.t. a I - diag(1, 3) PSD.
  ConicProblem p;
  p.dim = 1;
  p.f = Vector::Ones(1);
  p.lmis.push_back({-Eigen::Vector2d(1, 3).asDiagonal().toDenseMatrix(), {Matrix::Identity(2, 2)}});
  const auto s = solve(p);
  REQUIRE(s.status == ConicStatus::optimal);
  CHECK(s.x(0) == doctest::Approx(3.0).epsilon(1e-7));
  REQUIRE(s.Z.size() == 1);
  const Matrix slack = p.lmis[0].eval(s.x);
  CHECK((s.Z[0] * slack).norm() <= 1e-6);
  CHECK(s.Z[0].trace() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("minimized max eigenvalue of a pencil against a dense scan") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix M0 = testing::random_sym(rng, 3).matrix();
    // Indefinite direction keeps the problem bounded.
    const Eigen::HouseholderQR<Matrix> qr(testing::randn(rng, 3, 3));
    const Matrix U = qr.householderQ();
    const Matrix M1 = U * Eigen::Vector3d(1.0, -0.7, 0.3).asDiagonal() * U.transpose();
    ConicProblem p;
    p.dim = 2;  // [a, x]
    p.f = (Vector(2) << 1, 0).finished();
    p.lmis.push_back({-M0, {Matrix::Identity(3, 3), -M1}});
    const auto s = solve(p);
    REQUIRE(s.status == ConicStatus::optimal);
    double best = 1e300;
    for (int i = 0; i <= 200000; ++i) {
      const double x = -20.0 + 40.0 * i / 200000.0;
      best = std::min(best, Eigen::SelfAdjointEigenSolver<Matrix>(M0 + x * M1).eigenvalues().maxCoeff());
    }
    CHECK(s.objective == doctest::Approx(best).epsilon(1e-6));
    CHECK(s.max_violation <= 1e-8);
  }
}

TEST_CASE("quadratic objective with equality constraints") {
  // min (x - 1)^2 s.t. x >= 2.
  ConicProblem q;
  q.dim = 1;
  q.H = Matrix::Ones(1, 1);
  q.f = -2.0 * Vector::Ones(1);
  q.g = 1.0;
  q.lmis.push_back(scalar_map(-2.0, {1.0}));
  const auto s = solve(q);
  REQUIRE(s.status == ConicStatus::optimal);
  CHECK(s.x(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.objective == doctest::Approx(1.0).epsilon(1e-6));

  // min x1 + x2 s.t. x1 = x2, [[x1, 1], [1, x2]] PSD.
  ConicProblem e;
  e.dim = 2;
  e.f = Vector::Ones(2);
  e.E = (Matrix(1, 2) << 1, -1).finished();
  e.h = Vector::Zero(1);
  Matrix C(2, 2), E1 = Matrix::Zero(2, 2), E2 = Matrix::Zero(2, 2);
  C << 0, 1, 1, 0;
  E1(0, 0) = 1;
  E2(1, 1) = 1;
  e.lmis.push_back({C, {E1, E2}});
  const auto t = solve(e);
  REQUIRE(t.status == ConicStatus::optimal);
  CHECK(t.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(t.x(1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(t.eq_residual <= 1e-9);
}

TEST_CASE("infeasible and malformed problems") {
  ConicProblem p;
  p.dim = 1;
  p.f = Vector::Ones(1);
  p.lmis.push_back(scalar_map(-1.0, {1.0}));
  p.lmis.push_back(scalar_map(0.0, {-1.0}));
  CHECK(solve(p).status == ConicStatus::infeasible);

  ConicProblem bad;
  bad.dim = 2;
  bad.f = Vector::Ones(3);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  ConicProblem asym;
  asym.dim = 1;
  asym.lmis.push_back({Matrix::Zero(2, 2), {(Matrix(2, 2) << 0, 1, 0, 0).finished()}});
  CHECK_THROWS_AS(asym.validate(), InvalidArgument);
}

TEST_CASE("max slack feasibility") {
  const auto open = max_slack_feasibility({scalar_map(0.0, {1.0})});
  CHECK(open.capped);
  CHECK(open.t == doctest::Approx(kSlackCap));
  CHECK(open.feasible());

  // x >= t and -1 - x >= t: best t = -1/2.
  const auto pair = max_slack_feasibility({scalar_map(0.0, {1.0}), scalar_map(-1.0, {-1.0})});
  CHECK_FALSE(pair.capped);
  CHECK_FALSE(pair.feasible());
  CHECK(pair.t == doctest::Approx(-0.5).epsilon(1e-7));
  CHECK(pair.x(0) == doctest::Approx(-0.5).epsilon(1e-7));

  // Boundary case: only x = 0 works.
  const auto tight = max_slack_feasibility({scalar_map(0.0, {1.0}), scalar_map(0.0, {-1.0})});
  CHECK(tight.feasible());
  CHECK(std::abs(tight.t) <= 1e-8);

  CHECK(to_string(ConicStatus::optimal) == "optimal");
}
