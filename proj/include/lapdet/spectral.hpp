#pragma once
// Spectra, det*, theta and zeta of a twisted Laplacian.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "lapdet/errors.hpp"
#include "lapdet/operator.hpp"

namespace lapdet {

inline constexpr int kDenseLimit = 8192;

struct Spectrum {
  Eigen::VectorXd eigenvalues;  // ascending, walk-time units
  int kernel_dim = 0;
  int d = 1;
  std::optional<Eigen::MatrixXcd> vectors;  // columns, coordinates of TwistedLaplacian::matrix

  int n() const { return static_cast<int>(eigenvalues.size()); }
  double zero_threshold() const {
    return 1e-10 * std::max(1.0, eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 1.0);
  }
};

namespace detail {

inline bool is_real(const SparseC& A) {
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseC::InnerIterator it(A, k); it; ++it)
      if (it.value().imag() != 0.0) return false;
  return true;
}

inline Eigen::SparseMatrix<double> real_part(const SparseC& A) {
  Eigen::SparseMatrix<double> R = A.real();
  return R;
}

inline int count_zero(const Eigen::VectorXd& ev, double thr) {
  int k = 0;
  for (int i = 0; i < ev.size(); ++i) k += ev(i) < thr;
  return k;
}

}  // namespace detail

inline Spectrum eigensolve(const TwistedLaplacian& L, bool want_vectors, int dense_limit = kDenseLimit) {
  if (L.n() > dense_limit)
    fail(ErrorKind::SizeLimit, "dense eigensolve of size " + std::to_string(L.n()) + " exceeds " + std::to_string(dense_limit));
  Spectrum S;
  S.d = L.d;
  const auto opt = want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  if (detail::is_real(L.matrix)) {
    const Eigen::MatrixXd A = Eigen::MatrixXd(detail::real_part(L.matrix));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, opt);
    S.eigenvalues = es.eigenvalues();
    if (want_vectors) S.vectors = es.eigenvectors().cast<cplx>();
  } else {
    const Eigen::MatrixXcd A = Eigen::MatrixXcd(L.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, opt);
    S.eigenvalues = es.eigenvalues();
    if (want_vectors) S.vectors = es.eigenvectors();
  }
  const double lmax = S.eigenvalues.size() ? S.eigenvalues(S.n() - 1) : 0.0;
  if (S.n() && S.eigenvalues(0) < -1e-10 * std::max(1.0, lmax))
    fail(ErrorKind::KernelMismatch, "negative eigenvalue " + std::to_string(S.eigenvalues(0)));
  S.kernel_dim = detail::count_zero(S.eigenvalues, S.zero_threshold());
  if (S.kernel_dim != L.kernel_dim_expected)
    fail(ErrorKind::KernelMismatch, "eigensolve finds kernel " + std::to_string(S.kernel_dim) +
                                        ", covariant constants give " + std::to_string(L.kernel_dim_expected));
  return S;
}

inline double logdet_star(const Spectrum& S) {
  double s = 0.0;
  const double thr = S.zero_threshold();
  for (int i = 0; i < S.n(); ++i)
    if (S.eigenvalues(i) >= thr) s += std::log(S.eigenvalues(i));
  return s;
}

// Sparse backend: with Q an orthonormal kernel basis and I a set of k rows,
// det(H + sum_{i in I} e_i e_i^*) = det*(H) |det Q_I|^2.
inline double logdet_star_sparse(const TwistedLaplacian& L, const Eigen::MatrixXcd& Q) {
  const int n = L.n(), k = static_cast<int>(Q.cols());
  if (k > 0 && Q.rows() != n) fail(ErrorKind::KernelMismatch, "kernel basis has wrong length");
  std::vector<int> rows;
  double log_det_qi = 0.0;
  if (k > 0) {
    // Rows of Q chosen by column-pivoted QR on Q^*.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(Q.adjoint());
    for (int j = 0; j < k; ++j) rows.push_back(static_cast<int>(qr.colsPermutation().indices()(j)));
    Eigen::MatrixXcd QI(k, k);
    for (int j = 0; j < k; ++j) QI.row(j) = Q.row(rows[j]);
    log_det_qi = std::log(std::abs(QI.determinant()));
  }
  auto finish = [&](auto& ldlt) {
    if (ldlt.info() != Eigen::Success) fail(ErrorKind::KernelMismatch, "sparse factorization failed");
    double s = 0.0;
    const auto D = ldlt.vectorD();
    for (int i = 0; i < D.size(); ++i) {
      const double di = std::real(D(i));
      if (!(di > 0.0)) fail(ErrorKind::KernelMismatch, "non-positive pivot after deflation");
      s += std::log(di);
    }
    return s - 2.0 * log_det_qi;
  };
  if (detail::is_real(L.matrix)) {
    Eigen::SparseMatrix<double> A = detail::real_part(L.matrix);
    for (int r : rows) A.coeffRef(r, r) += 1.0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    return finish(ldlt);
  }
  Eigen::SparseMatrix<cplx> A = L.matrix.cast<cplx>();
  for (int r : rows) A.coeffRef(r, r) += 1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<cplx>> ldlt(A);
  return finish(ldlt);
}

inline double logdet_star_sparse(const TwistedLaplacian& L, const DiscreteSurface& ds) {
  return logdet_star_sparse(L, covariant_constants(ds));
}

inline double theta(const Spectrum& S, double t) {
  double s = 0.0;
  for (int i = 0; i < S.n(); ++i) s += std::exp(-S.eigenvalues(i) * t);
  return s;
}

// Block (x,x) of exp(-tH).
inline Mat heat_diag(const Spectrum& S, int x, double t) {
  if (!S.vectors) fail(ErrorKind::MissingVectors, "heat_diag needs eigenvectors");
  const auto& V = *S.vectors;
  const int d = S.d;
  Mat P = Mat::Zero(d, d);
  for (int i = 0; i < S.n(); ++i) {
    const double e = std::exp(-S.eigenvalues(i) * t);
    const Eigen::VectorXcd v = V.block(d * x, i, d, 1);
    P += e * (v * v.adjoint());
  }
  return P;
}

// Full exp(-tH) in the Hermitian coordinates.
inline Eigen::MatrixXcd heat_matrix(const Spectrum& S, double t) {
  if (!S.vectors) fail(ErrorKind::MissingVectors, "heat_matrix needs eigenvectors");
  const auto& V = *S.vectors;
  Eigen::VectorXd e(S.n());
  for (int i = 0; i < S.n(); ++i) e(i) = std::exp(-S.eigenvalues(i) * t);
  return V * e.asDiagonal() * V.adjoint();
}

inline std::complex<double> zeta(const Spectrum& S, std::complex<double> s) {
  std::complex<double> z = 0.0;
  const double thr = S.zero_threshold();
  for (int i = 0; i < S.n(); ++i)
    if (S.eigenvalues(i) >= thr) z += std::exp(-s * std::log(S.eigenvalues(i)));
  return z;
}

// d/ds zeta at s = 0.
inline double zeta_prime0(const Spectrum& S) { return -logdet_star(S); }

}  // namespace lapdet
