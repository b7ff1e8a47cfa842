#pragma once
// Zeta-regularised determinants of c(-grad^2) on flat tori and rectangles,
// each by two independent routes.

#include <cmath>
#include <complex>
#include <string>

#include "lapdet/errors.hpp"
#include "lapdet/special.hpp"
#include "lapdet/surface.hpp"

namespace lapdet {

struct ContinuumDet {
  double logdet = 0.0;      // closed-form route
  double logdet_alt = 0.0;  // theta-split route
  double zeta0 = 0.0;
};

namespace detail {

// zeta'(0) from the split of int_0^inf (Theta - k) t^{s-1} dt at t0, where on
// (0, t0) Theta - k = c1/t + ch/sqrt(t) + c0 + rem(t), rem0 = int_0^t0 rem dt/t
// and tail = int_t0^inf (Theta - k) dt/t.
inline double zeta_prime_split(double c1, double ch, double c0, double t0, double rem0, double tail) {
  return kEulerGamma * c0 + c0 * std::log(t0) - c1 / t0 - 2.0 * ch / std::sqrt(t0) + rem0 + tail;
}

// Modular reduction to |Re tau| <= 1/2, |tau| >= 1.
inline std::complex<double> reduce_tau(std::complex<double> tau) {
  if (!(tau.imag() > 0.0)) fail(ErrorKind::SchemaError, "torus modulus needs Im tau > 0");
  for (int i = 0; i < 1000; ++i) {
    tau -= std::round(tau.real());
    if (std::norm(tau) >= 1.0 - 1e-15) return tau;
    tau = -1.0 / tau;
  }
  return tau;
}

// Sum of f(|m + n tau|^2) over (m, n) != 0 until a whole shell is negligible.
template <class F>
double lattice_sum(std::complex<double> tau, const F& f) {
  double s = 0.0;
  for (int K = 1; K < 100000; ++K) {
    double shell = 0.0;
    for (int m = -K; m <= K; ++m)
      for (int n = -K; n <= K; ++n) {
        if (std::max(std::abs(m), std::abs(n)) != K) continue;
        shell += f(std::norm(double(m) + double(n) * tau));
      }
    s += shell;
    if (std::abs(shell) < 1e-18 * std::max(1.0, std::abs(s)) && K > 2) break;
  }
  return s;
}

}  // namespace detail

// log det* of c(-grad^2) on the torus C / L(Z + tau Z) of area scale^2.
inline double torus_logdet_kronecker(std::complex<double> tau, double scale = 1.0, double c = 1.0) {
  tau = detail::reduce_tau(tau);
  const double y = tau.imag();
  const std::complex<double> q = std::exp(2.0 * kPi * std::complex<double>(0.0, 1.0) * tau);
  double log_eta = -kPi * y / 12.0;
  std::complex<double> qn = q;
  for (int n = 1; n < 10000 && std::abs(qn) > 1e-18; ++n, qn *= q) log_eta += std::log(std::abs(1.0 - qn));
  return std::log(scale * scale * y) + 4.0 * log_eta - std::log(c);
}

inline double torus_logdet_theta(std::complex<double> tau, double scale = 1.0, double c = 1.0) {
  tau = detail::reduce_tau(tau);
  const double y = tau.imag();
  const double area = scale * scale;
  const double t0 = area / (4.0 * kPi * c);
  // Eigenvalues 4 pi^2 c |m + n tau|^2 / (area y); periods |l|^2 = area |m + n tau|^2 / y.
  const double tail = detail::lattice_sum(tau, [&](double r2) { return expint_e1(4.0 * kPi * kPi * c * r2 / (area * y) * t0); });
  const double rem = area / (4.0 * kPi * c) * detail::lattice_sum(tau, [&](double r2) {
                       const double a = area * r2 / (y * 4.0 * c);
                       return std::exp(-a / t0) / a;
                     });
  return -detail::zeta_prime_split(area / (4.0 * kPi * c), 0.0, -1.0, t0, rem, tail);
}

// Both routes; they must agree to 1e-9.
inline ContinuumDet torus_zeta_det(std::complex<double> tau, double scale = 1.0, double c = 1.0) {
  ContinuumDet r;
  r.logdet = torus_logdet_kronecker(tau, scale, c);
  r.logdet_alt = torus_logdet_theta(tau, scale, c);
  r.zeta0 = -1.0;
  if (!(std::abs(r.logdet - r.logdet_alt) < 1e-9))
    fail(ErrorKind::QuadratureFailure, "torus determinant routes disagree: " + std::to_string(r.logdet) + " vs " +
                                           std::to_string(r.logdet_alt));
  return r;
}

// Theta(t) = sum_j exp(-t lambda_j) on the torus.
inline double torus_heat_trace(std::complex<double> tau, double scale, double c, double t) {
  tau = detail::reduce_tau(tau);
  const double y = tau.imag(), area = scale * scale;
  if (t < area / (4.0 * kPi * c)) {
    return area / (4.0 * kPi * c * t) *
           (1.0 + detail::lattice_sum(tau, [&](double r2) { return std::exp(-area * r2 / (y * 4.0 * c * t)); }));
  }
  return 1.0 + detail::lattice_sum(tau, [&](double r2) { return std::exp(-t * 4.0 * kPi * kPi * c * r2 / (area * y)); });
}

// Rectangle [0, a] x [0, b] with eigenvalues c pi^2 (m^2/a^2 + n^2/b^2),
// m, n >= 1 (Dirichlet) or m, n >= 0 without (0, 0) (Neumann).
inline double rectangle_logdet_series(double a, double b, BC bc, double c = 1.0) {
  if (!(a > 0.0 && b > 0.0)) fail(ErrorKind::SchemaError, "rectangle sides must be positive");
  const double r = b / a;
  double lsum = 0.0;
  for (int m = 1; m < 100000; ++m) {
    const double t = std::log1p(-std::exp(-2.0 * kPi * m * r));
    lsum += t;
    if (std::abs(t) < 1e-18) break;
  }
  const double zp_d = -0.25 * std::log(kPi * kPi / (b * b)) + 0.5 * std::log(2.0 * kPi / r) + kPi * r / 12.0 - lsum;
  double zp = zp_d, z0 = 0.25;
  if (bc == BC::Neumann) {
    zp = zp_d - std::log(2.0 * a) - std::log(2.0 * b);
    z0 = -0.75;
  }
  return -(zp - z0 * std::log(c));
}

inline double rectangle_logdet_theta(double a, double b, BC bc, double c = 1.0) {
  if (!(a > 0.0 && b > 0.0)) fail(ErrorKind::SchemaError, "rectangle sides must be positive");
  const double s = bc == BC::Neumann ? 1.0 : -1.0;
  const int k = bc == BC::Neumann ? 1 : 0;
  const double t0 = a * b / (kPi * c);
  const double pa = c * kPi * kPi / (a * a), pb = c * kPi * kPi / (b * b);
  // Theta = (phi_a + s)(phi_b + s)/4 with phi(t) = sum_Z exp(-p m^2 t)
  // = P(t) (1 + 2 sum_{k>=1} exp(-side^2 k^2/(c t))), P = side/sqrt(c pi t).
  auto sum_to_zero = [](auto term) {
    double acc = 0.0;
    for (int j = 1; j < 1000000; ++j) {
      const double v = term(j);
      acc += v;
      if (std::abs(v) < 1e-19 * std::max(1.0, std::abs(acc)) && j > 3) break;
    }
    return acc;
  };
  const double ab = a * b / (c * kPi);
  // int_0^t0 t^-2 e^{-al/t} = e^{-al/t0}/al; int_0^t0 t^{-3/2} e^{-al/t} = sqrt(pi) erfc(sqrt(al/t0))/sqrt(al).
  auto pr = [&](double other) {
    return ab * 2.0 * sum_to_zero([&](int j) {
             const double al = other * other * j * j / c;
             return std::exp(-al / t0) / al;
           });
  };
  auto rr = [&](double side) {
    return side / std::sqrt(c * kPi) * 2.0 * sum_to_zero([&](int j) {
             const double al = side * side * j * j / c;
             return std::sqrt(kPi) * std::erfc(std::sqrt(al / t0)) / std::sqrt(al);
           });
  };
  const double rab = ab * 4.0 * sum_to_zero([&](int j) {
    return sum_to_zero([&](int l) {
      const double be = (a * a * j * j + b * b * l * l) / c;
      return std::exp(-be / t0) / be;
    });
  });
  const double rem = 0.25 * (pr(b) + pr(a) + s * rr(a) + s * rr(b) + rab);
  // Tail from the spectrum.
  auto row = [&](int m0, int n0) {
    return sum_to_zero([&](int m1) {
      const int m = m1 - 1 + m0;
      return sum_to_zero([&](int n1) {
        const int n = n1 - 1 + n0;
        if (m == 0 && n == 0) return 0.0;
        return expint_e1((pa * m * m + pb * n * n) * t0);
      });
    });
  };
  // sum_to_zero stops on a zero term, so the (0, 0) hole is handled by splitting.
  double tail = 0.0;
  if (bc == BC::Dirichlet) tail = row(1, 1);
  else
    tail = row(1, 0) + sum_to_zero([&](int n) { return expint_e1(pb * n * n * t0); });
  const double c1 = a * b / (4.0 * kPi * c);
  const double ch = s * (a + b) / (4.0 * std::sqrt(c * kPi));
  const double c0 = 0.25 - k;
  return -detail::zeta_prime_split(c1, ch, c0, t0, rem, tail);
}

inline ContinuumDet rectangle_zeta_det(double a, double b, BC bc, double c = 1.0) {
  ContinuumDet r;
  r.logdet = rectangle_logdet_series(a, b, bc, c);
  r.logdet_alt = rectangle_logdet_theta(a, b, bc, c);
  r.zeta0 = bc == BC::Neumann ? -0.75 : 0.25;
  if (!(std::abs(r.logdet - r.logdet_alt) < 1e-9))
    fail(ErrorKind::QuadratureFailure, "rectangle determinant routes disagree: " + std::to_string(r.logdet) + " vs " +
                                           std::to_string(r.logdet_alt));
  return r;
}

}  // namespace lapdet
