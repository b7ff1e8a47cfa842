#pragma once
// Closed-form singularity constants, the corner assembly and the volume constant A.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lapdet/errors.hpp"
#include "lapdet/lattice.hpp"
#include "lapdet/linalg.hpp"
#include "lapdet/plane.hpp"
#include "lapdet/special.hpp"
#include "lapdet/surface.hpp"

namespace lapdet {

inline double c_cone(double alpha) { return alpha / (12.0 * kPi) - kPi / (3.0 * alpha); }

inline double c_corner(double alpha, BC b, BC b_hat) {
  if (b == b_hat) return alpha / (12.0 * kPi) - kPi / (12.0 * alpha);
  return alpha / (12.0 * kPi) + kPi / (24.0 * alpha);
}

// Eigenphases of a unitary matrix in [0, 2 pi).
inline std::vector<double> eigenphases(const Mat& M) {
  if (!is_unitary(M, 1e-10)) fail(ErrorKind::NonUnitaryMatrix, "monodromy is not unitary");
  Eigen::ComplexEigenSolver<Mat> es(M);
  std::vector<double> th;
  for (int i = 0; i < M.rows(); ++i) {
    double a = std::arg(es.eigenvalues()(i));
    if (a < 0.0) a += 2.0 * kPi;
    if (a >= 2.0 * kPi - 1e-15) a = 0.0;
    th.push_back(a);
  }
  return th;
}

// pi^-2 sum_k (1 - Re Tr M^k / d) / k^2 through Re Li2(e^{i theta}) = pi^2/6 - pi theta/2 + theta^2/4.
inline double c_puncture(const Mat& M) {
  double s = 0.0;
  for (double th : eigenphases(M)) {
    const double x = th / (2.0 * kPi);
    s += x * (1.0 - x);
  }
  return s / static_cast<double>(M.rows());
}

enum class ContinuumKind { UniversalCover, Cone, HalfPlane, Puncture };

// int_0^inf (P_model - P_plane)(x, x, t) dt/t at |x| = 1 in the continuum.
inline double continuum_i_universal_cover(double alpha) { return 1.0 / (kPi * alpha * alpha); }
inline double continuum_i_cone(double alpha) { return kPi / (3.0 * alpha * alpha) - 1.0 / (12.0 * kPi); }
inline double continuum_i_halfplane(BC b) { return bc_sign(b) / (4.0 * kPi); }
inline double continuum_i_puncture(const Mat& M) {
  const double d = static_cast<double>(M.rows());
  return -d * c_puncture(M) / (2.0 * kPi);
}

namespace detail {

// I_C^W(e^{i theta}) for the wedge 0 < arg z < alpha with sides of sign s0
// (arg 0) and s1 (arg alpha), with the 1/theta^2 part removed when `drop` is
// set: that part is the half-plane term of the side at arg 0.
inline double wedge_i(double alpha, int s0, int s1, double theta, bool drop) {
  const double pi = kPi;
  const double a2 = alpha * alpha;
  double smooth;
  if (s0 * s1 == 1)
    smooth = (pi / 3.0) * (1.0 / (4.0 * a2) - 1.0 / (4.0 * pi * pi));
  else
    smooth = -(pi / 6.0) / (4.0 * a2) - (pi / 3.0) / (4.0 * pi * pi);
  const double u = pi * theta / alpha;
  double image;
  if (drop) {
    const double r = s0 * s1 == 1 ? inv_sin2_minus_inv_u2(u) : cos_over_sin2_minus_inv_u2(u);
    image = s0 * pi / (4.0 * a2) * r;
  } else {
    const double sn = std::sin(u);
    const double r = s0 * s1 == 1 ? 1.0 / (sn * sn) : std::cos(u) / (sn * sn);
    image = s0 * pi / (4.0 * a2) * r;
  }
  return smooth + image;
}

// I_H^W(e^{i theta}) against the half-plane of the side at arg 0.
inline double wedge_i_halfplane(double alpha, int s0, int s1, double theta) {
  return wedge_i(alpha, s0, s1, theta, true) - s0 / (4.0 * kPi) * inv_sin2_minus_inv_u2(theta);
}

template <class F>
double integrate(const F& f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-14, &err);
}

}  // namespace detail

// Hat C of the corner decomposition by quadrature of the image sums.
inline double corner_hat_numeric(double alpha, BC b, BC b_hat) {
  const int s0 = bc_sign(b), s1 = bc_sign(b_hat);
  const double L = std::min(alpha / 2.0, kPi / 2.0);
  double h = detail::integrate([&](double th) { return detail::wedge_i_halfplane(alpha, s0, s1, th); }, 0.0, L);
  h += detail::integrate([&](double th) { return detail::wedge_i_halfplane(alpha, s1, s0, th); }, 0.0, L);
  if (alpha > kPi)
    h += detail::integrate([&](double th) { return detail::wedge_i(alpha, s0, s1, th, false); }, kPi / 2.0,
                           alpha - kPi / 2.0);
  return h;
}

// The same quantity from the closed forms of the sector integrals.
inline double corner_hat_closed(double alpha, BC b, BC b_hat) {
  const double pi = kPi;
  if (b == b_hat) {
    const int s = bc_sign(b);
    if (alpha <= pi) return 2.0 * (pi / (24.0 * alpha) - alpha / (24.0 * pi) + s / (4.0 * pi) / std::tan(alpha / 2.0));
    const double c = 1.0 / std::tan(pi * pi / (2.0 * alpha));
    const double sides = pi * pi / (12.0 * alpha * alpha) - 1.0 / 12.0 - s / (2.0 * alpha) * c;
    const double middle = (pi / (12.0 * alpha * alpha) - 1.0 / (12.0 * pi)) * (alpha - pi) + s / (2.0 * alpha) * c;
    return sides + middle;
  }
  if (alpha > pi) fail(ErrorKind::AssemblyMismatch, "no closed form for mixed corners beyond pi");
  const double ct = 1.0 / std::tan(alpha / 2.0);
  const double dn1 = -pi / (48.0 * alpha) - alpha / (24.0 * pi) - 1.0 / (4.0 * alpha) + ct / (4.0 * pi);
  const double dn2 = -pi / (48.0 * alpha) - alpha / (24.0 * pi) + 1.0 / (4.0 * alpha) - ct / (4.0 * pi);
  return dn1 + dn2;
}

struct CornerAssembly {
  double hat = 0.0;       // quadrature
  double hat_closed = 0.0;
  bool has_closed = false;
  double c_p = 0.0;       // assembled constant
  double expected = 0.0;  // c_corner
};

// C_p = -(hat C - (s_b + s_b^) cot(min(alpha/2, pi/2)) / 4 pi).
inline CornerAssembly corner_assembly_check(double alpha, BC b, BC b_hat, double tol = 1e-12) {
  CornerAssembly r;
  r.hat = corner_hat_numeric(alpha, b, b_hat);
  r.has_closed = b == b_hat || alpha <= kPi;
  if (r.has_closed) r.hat_closed = corner_hat_closed(alpha, b, b_hat);
  const double m = std::min(alpha / 2.0, kPi / 2.0);
  const double cot = m == kPi / 2.0 ? 0.0 : 1.0 / std::tan(m);
  r.c_p = -(r.hat - (bc_sign(b) + bc_sign(b_hat)) * cot / (4.0 * kPi));
  r.expected = c_corner(alpha, b, b_hat);
  if (std::abs(r.c_p - r.expected) > tol || (r.has_closed && std::abs(r.hat - r.hat_closed) > tol))
    fail(ErrorKind::AssemblyMismatch, "corner assembly at alpha " + std::to_string(alpha) + " " + bc_char(b) +
                                          bc_char(b_hat) + ": " + std::to_string(r.c_p) + " vs " +
                                          std::to_string(r.expected));
  return r;
}

// A = average over vertex classes of <log sigma>, so that the volume term is
// -A per vertex.
inline double lattice_constant_A(const LatticeSpec& lat) {
  double s = 0.0;
  for (int c = 0; c < lat.class_count(); ++c) s += lat.total_weight(c) > 0.0 ? std::log(lat.total_weight(c)) - plane_volume_integral(lat, c) : 0.0;
  return s / lat.class_count();
}

inline double singularity_constant(const Singularity& s) {
  switch (s.kind) {
    case SingularityKind::Cone: return c_cone(s.angle);
    case SingularityKind::Corner: return c_corner(s.angle, s.b, s.b_hat);
    case SingularityKind::Puncture: return c_puncture(s.M);
  }
  return 0.0;
}

// C = -2k - d sum_p C_p.
inline double theorem_C(const FaceComplex& fc, int k) {
  double s = 0.0;
  for (const auto& p : fc.singularities) s += singularity_constant(p);
  return -2.0 * k - fc.rank * s;
}

inline double theorem_C(const SurfaceSpec& spec, int k) { return theorem_C(build_face_complex(spec), k); }

}  // namespace lapdet
