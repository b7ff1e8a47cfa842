#pragma once
// Scalar special functions used across the library.

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "lapdet/errors.hpp"

namespace lapdet {

inline constexpr double kEulerGamma = 0.5772156649015329;
inline constexpr double kPi = std::numbers::pi;

// E1(x) = int_x^inf e^{-t}/t dt for x > 0.
// Power series below 1, Lentz continued fraction above.
inline double expint_e1(double x) {
  if (!(x > 0.0)) {
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    fail(ErrorKind::QuadratureFailure, "expint_e1 needs x > 0");
  }
  if (x > 745.0) return 0.0;
  if (x < 1.0) {
    double sum = 0.0, term = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= -x / k;
      const double add = -term / k;
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return -kEulerGamma - std::log(x) + sum;
  }
  const double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

// log(lambda) + E1(lambda*T), with the lambda -> 0 limit -gamma - log T.
inline double frullani_f(double lambda, double T) {
  if (lambda <= 0.0) return -kEulerGamma - std::log(T);
  const double x = lambda * T;
  if (x < 1e-3) {
    // log(lambda) + E1(x) = -gamma - log T + x - x^2/4 + x^3/18 - ...
    double sum = 0.0, term = 1.0;
    for (int k = 1; k < 30; ++k) {
      term *= -x / k;
      sum += -term / k;
    }
    return -kEulerGamma - std::log(T) + sum;
  }
  return std::log(lambda) + expint_e1(x);
}

// e^{-t} I_nu(t) for integer nu >= 0 and t >= 0.
inline double scaled_bessel_i(int nu, double t) {
  if (t == 0.0) return nu == 0 ? 1.0 : 0.0;
  if (t <= 500.0) return std::exp(-t) * boost::math::cyl_bessel_i(nu, t);
  // Hankel expansion: (2 pi t)^{-1/2} sum_k (-1)^k a_k(nu) / t^k.
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 40; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (8.0 * k * t);
    sum += term;
    if (std::abs(term) < 1e-18) break;
  }
  return sum / std::sqrt(2.0 * kPi * t);
}

// 1/sin^2(u) - 1/u^2, stable near 0.
inline double inv_sin2_minus_inv_u2(double u) {
  if (std::abs(u) < 0.05) {
    const double u2 = u * u;
    return 1.0 / 3.0 + u2 / 15.0 + 2.0 * u2 * u2 / 189.0 + u2 * u2 * u2 / 675.0;
  }
  const double s = std::sin(u);
  return 1.0 / (s * s) - 1.0 / (u * u);
}

// cos(u)/sin^2(u) - 1/u^2, stable near 0.
inline double cos_over_sin2_minus_inv_u2(double u) {
  if (std::abs(u) < 0.05) {
    const double u2 = u * u;
    return -1.0 / 6.0 - 7.0 * u2 / 120.0 - 31.0 * u2 * u2 / 3024.0 - 127.0 * u2 * u2 * u2 / 86400.0;
  }
  const double s = std::sin(u);
  return std::cos(u) / (s * s) - 1.0 / (u * u);
}

}  // namespace lapdet
