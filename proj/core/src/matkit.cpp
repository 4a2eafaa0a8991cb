#include "invlqr/matkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace invlqr {

void require_finite(const Matrix& X, std::string_view what) {
  if (!X.allFinite()) {
    throw InvalidArgument(std::string(what) + ": non-finite entry");
  }
}

void require_square(const Matrix& X, std::string_view what) {
  if (X.rows() != X.cols()) {
    throw InvalidArgument(std::string(what) + ": expected a square matrix, got " +
                          std::to_string(X.rows()) + "x" + std::to_string(X.cols()));
  }
}

SymMatrix::SymMatrix(const Matrix& X) {
  require_square(X, "SymMatrix");
  require_finite(X, "SymMatrix");
  const double asym = (X - X.transpose()).norm();
  if (asym > kSymTol * (1.0 + X.norm())) {
    throw InvalidArgument("SymMatrix: input is not symmetric (asymmetry " +
                          std::to_string(asym) + ")");
  }
  m_ = 0.5 * (X + X.transpose());
}

SymMatrix SymMatrix::symmetrize(const Matrix& X) {
  require_square(X, "SymMatrix::symmetrize");
  SymMatrix s;
  s.m_ = 0.5 * (X + X.transpose());
  return s;
}

SymMatrix SymMatrix::zero(int n) {
  SymMatrix s;
  s.m_ = Matrix::Zero(n, n);
  return s;
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix s;
  s.m_ = Matrix::Identity(n, n);
  return s;
}

Vector vec(const Matrix& X) {
  require_square(X, "vec");
  return Eigen::Map<const Vector>(X.data(), X.size());
}

Matrix mat(const Vector& v, int n) {
  if (v.size() != static_cast<Eigen::Index>(n) * n) {
    throw InvalidArgument("mat: length " + std::to_string(v.size()) + " is not " +
                          std::to_string(n) + "^2");
  }
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

int vech_size(int n) { return n * (n + 1) / 2; }

Vector vech(const SymMatrix& X) {
  const int n = X.order();
  Vector v(vech_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) v(k++) = X(i, j);
  }
  return v;
}

SymMatrix unvech(const Vector& v, int n) {
  if (v.size() != vech_size(n)) {
    throw InvalidArgument("unvech: length mismatch");
  }
  Matrix X(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      X(i, j) = v(k);
      X(j, i) = v(k);
      ++k;
    }
  }
  return SymMatrix::symmetrize(X);
}

Matrix duplication_matrix(int n) {
  Matrix D = Matrix::Zero(static_cast<Eigen::Index>(n) * n, vech_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      D(i + j * n, k) = 1.0;
      D(j + i * n, k) = 1.0;
      ++k;
    }
  }
  return D;
}

Matrix elimination_matrix(int n) {
  Matrix L = Matrix::Zero(vech_size(n), static_cast<Eigen::Index>(n) * n);
  int k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) L(k++, i + j * n) = 1.0;
  }
  return L;
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    }
  }
  return K;
}

Matrix pinv(const Matrix& X, double relTol) {
  if (X.size() == 0) return Matrix::Zero(X.cols(), X.rows());
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cut = std::max(relTol * s(0), kAbsFloor);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Pade(13) scaling and squaring (Higham 2005).
Matrix expm(const Matrix& X) {
  require_square(X, "expm");
  const Eigen::Index n = X.rows();
  if (n == 0) return X;
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm1 = X.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Matrix A = X / std::ldexp(1.0, s);

  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
                        b[5] * A4 + b[3] * A2 + b[1] * I);
  const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                   b[4] * A4 + b[2] * A2 + b[0] * I;
  Matrix R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k) R = R * R;
  return R;
}

double min_eig_sym(const SymMatrix& X) {
  if (X.order() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(X.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig_sym(const SymMatrix& X) {
  if (X.order() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(X.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(X.order() - 1);
}

bool is_psd(const SymMatrix& X, double tol) {
  return min_eig_sym(X) >= -tol * (1.0 + X.matrix().norm());
}

int rank_tol(const Matrix& X, double relTol) {
  if (X.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(X);
  const Vector& s = svd.singularValues();
  if (s(0) <= kAbsFloor) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) >= relTol * s(0)) ++r;
  }
  return r;
}

Matrix controllability_matrix(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  Matrix C(n, n * B.cols());
  Matrix blk = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    C.middleCols(k * B.cols(), B.cols()) = blk;
    blk = A * blk;
  }
  return C;
}

Matrix null_space(const Matrix& X, double relTol) {
  const Eigen::Index cols = X.cols();
  if (X.rows() == 0) return Matrix::Identity(cols, cols);
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cut = std::max(relTol * (s.size() ? s(0) : 0.0), kAbsFloor);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixV().rightCols(cols - r);
}

double max_principal_angle(const Matrix& U, const Matrix& V) {
  if (U.cols() != V.cols()) return std::numbers::pi / 2;
  if (U.cols() == 0) return 0.0;
  const Matrix Qu = Eigen::HouseholderQR<Matrix>(U).householderQ() *
                    Matrix::Identity(U.rows(), U.cols());
  const Matrix Qv = Eigen::HouseholderQR<Matrix>(V).householderQ() *
                    Matrix::Identity(V.rows(), V.cols());
  const Matrix resid = Qv - Qu * (Qu.transpose() * Qv);
  Eigen::JacobiSVD<Matrix> svd(resid);
  const double smax = std::clamp(svd.singularValues()(0), 0.0, 1.0);
  return std::asin(smax);
}

}  // namespace invlqr
