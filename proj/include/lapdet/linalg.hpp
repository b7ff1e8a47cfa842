#pragma once

#include <complex>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "lapdet/errors.hpp"

namespace lapdet {

using cplx = std::complex<double>;

// Fiber matrices are small; a fixed buffer avoids heap traffic per edge.
inline constexpr int kMaxRank = 4;
using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRank, kMaxRank>;

inline Mat identity(int d) { return Mat::Identity(d, d); }

inline double unitarity_defect(const Mat& U) {
  return (U.adjoint() * U - Mat::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
}

inline bool is_unitary(const Mat& U, double tol = 1e-12) { return U.rows() == U.cols() && unitarity_defect(U) <= tol; }

inline double spectral_norm(const Mat& A) {
  const Eigen::MatrixXcd dense = A;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(dense);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// Row-major list of [re, im] pairs; a bare number is a real entry.
inline Mat matrix_from_json(const nlohmann::json& j, int d) {
  if (!j.is_array() || static_cast<int>(j.size()) != d * d)
    fail(ErrorKind::SchemaError, "matrix needs " + std::to_string(d * d) + " entries");
  Mat U(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      const auto& e = j[r * d + c];
      if (e.is_number()) U(r, c) = cplx(e.get<double>(), 0.0);
      else if (e.is_array() && e.size() == 2) U(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      else fail(ErrorKind::SchemaError, "matrix entry must be a number or [re, im]");
    }
  return U;
}

inline nlohmann::json matrix_to_json(const Mat& U) {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < U.rows(); ++r)
    for (int c = 0; c < U.cols(); ++c) j.push_back({U(r, c).real(), U(r, c).imag()});
  return j;
}

}  // namespace lapdet
