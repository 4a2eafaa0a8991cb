#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace invlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymTol = 1e-10;
inline constexpr double kAbsFloor = 1e-12;

// Raised when an argument breaks a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an algorithm cannot produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_finite(const Matrix& X, std::string_view what);
void require_square(const Matrix& X, std::string_view what);

// Symmetric matrix stored exactly symmetrized.
class SymMatrix {
 public:
  SymMatrix() = default;
  // Rejects input further than kSymTol (relative) from symmetric.
  explicit SymMatrix(const Matrix& X);

  static SymMatrix symmetrize(const Matrix& X);
  static SymMatrix zero(int n);
  static SymMatrix identity(int n);

  int order() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymMatrix operator+(const SymMatrix& o) const { return symmetrize(m_ + o.m_); }
  SymMatrix operator-(const SymMatrix& o) const { return symmetrize(m_ - o.m_); }
  SymMatrix operator*(double s) const { return symmetrize(m_ * s); }

 private:
  Matrix m_;
};

Vector vec(const Matrix& X);
Matrix mat(const Vector& v, int n);

int vech_size(int n);
Vector vech(const SymMatrix& X);
// Inverse of vech: mat(D * v).
SymMatrix unvech(const Vector& v, int n);

Matrix duplication_matrix(int n);
Matrix elimination_matrix(int n);

Matrix kron(const Matrix& A, const Matrix& B);

Matrix pinv(const Matrix& X, double relTol = 1e-10);
Matrix expm(const Matrix& X);

double min_eig_sym(const SymMatrix& X);
double max_eig_sym(const SymMatrix& X);
bool is_psd(const SymMatrix& X, double tol = 1e-9);

int rank_tol(const Matrix& X, double relTol = 1e-8);

Matrix controllability_matrix(const Matrix& A, const Matrix& B);

// Orthonormal basis (columns) of the null space of X, cut at relTol * sigma_max.
Matrix null_space(const Matrix& X, double relTol = 1e-8);

// Largest principal angle (radians) between the column spans of U and V.
double max_principal_angle(const Matrix& U, const Matrix& V);

}  // namespace invlqr
