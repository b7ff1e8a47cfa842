#pragma once
// Heat kernel of the infinite lattice through its Bloch symbol.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "lapdet/errors.hpp"
#include "lapdet/lattice.hpp"
#include "lapdet/special.hpp"

namespace lapdet {

// Sigma(k) with (Sigma f)_c = sum_e w (f_c - e^{i k.(m,n)} f_to), k in [-pi, pi]^2.
inline Eigen::MatrixXcd bloch_symbol(const LatticeSpec& lat, double k1, double k2) {
  const int n = lat.class_count();
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& e : lat.edges) {
    S(e.from, e.from) += e.weight;
    S(e.from, e.to) -= e.weight * std::polar(1.0, k1 * e.m + k2 * e.n);
  }
  return S;
}

namespace detail {

// Diagonal of f(Sigma(k)) for every class.
inline Eigen::VectorXd symbol_diag(const LatticeSpec& lat, double k1, double k2, const std::function<double(double)>& f) {
  const int n = lat.class_count();
  if (n == 1) {
    double s = 0.0;
    for (const auto& e : lat.edges) {
      const double h = std::sin(0.5 * (k1 * e.m + k2 * e.n));
      s += 2.0 * e.weight * h * h;
    }
    return Eigen::VectorXd::Constant(1, f(s));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bloch_symbol(lat, k1, k2));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double fj = f(std::max(1e-300, es.eigenvalues()(j)));
    for (int c = 0; c < n; ++c) out(c) += fj * std::norm(es.eigenvectors()(c, j));
  }
  return out;
}

}  // namespace detail

// Brillouin-zone average of diag f(Sigma(k)) for class c. The square of
// wavevectors is cut into four triangles with apex at k = 0 so that the
// singularity of f at zero sits at a corner; `scale` is the radial size of the
// region where f varies fastest (1 for smooth f, t^{-1/2} for exp(-t sigma)).
// Fixed Gauss-Legendre rules: 64 nodes across each triangle, 30 per radial
// segment, with segments growing geometrically by 4 away from the apex.
inline double bz_average(const LatticeSpec& lat, int c, const std::function<double(double)>& f, double scale = 1.0) {
  using Outer = boost::math::quadrature::gauss<double, 64>;
  using Inner = boost::math::quadrature::gauss<double, 30>;
  const std::array<std::array<double, 2>, 4> P{{{kPi, -kPi}, {kPi, kPi}, {-kPi, kPi}, {-kPi, -kPi}}};
  // [0, 1e-8] is dropped: its share is O(1e-16 log) for the integrands used here.
  std::vector<double> breaks{1e-8};
  for (double s = std::min(1.0, 4.0 * scale); s > 1e-8; s /= 4.0) breaks.insert(breaks.begin() + 1, s);
  if (breaks.back() < 1.0) breaks.push_back(1.0);
  double total = 0.0;
  for (int j = 0; j < 4; ++j) {
    const auto& A = P[j];
    const auto& B = P[(j + 1) % 4];
    const double jac = std::abs(A[0] * B[1] - A[1] * B[0]);
    auto radial = [&](double v) {
      const double e1 = A[0] + v * (B[0] - A[0]), e2 = A[1] + v * (B[1] - A[1]);
      auto g = [&](double s) { return s * detail::symbol_diag(lat, s * e1, s * e2, f)(c); };
      double r = 0.0;
      for (std::size_t i = 0; i + 1 < breaks.size(); ++i) r += Inner::integrate(g, breaks[i], breaks[i + 1]);
      return r;
    };
    total += jac * Outer::integrate(radial, 0.0, 1.0);
  }
  if (!std::isfinite(total)) fail(ErrorKind::QuadratureFailure, "non-finite Brillouin-zone integral");
  return total / (4.0 * kPi * kPi);
}

// P(x, x, t) on the infinite lattice at a vertex of class c, walk time t.
inline double plane_kernel_bz(const LatticeSpec& lat, int c, double t) {
  if (t < 0.0) fail(ErrorKind::QuadratureFailure, "plane kernel needs t >= 0");
  if (t == 0.0) return 1.0;
  return bz_average(lat, c, [t](double l) { return std::exp(-t * l); }, 1.0 / std::sqrt(std::max(1.0, t)));
}

inline bool has_bessel_form(const LatticeSpec& lat) {
  if (lat.class_count() != 1 || lat.edges.size() != 4) return false;
  for (const auto& e : lat.edges)
    if (std::abs(e.m) + std::abs(e.n) != 1 || std::abs(e.weight - lat.edges[0].weight) > 1e-15) return false;
  return true;
}

inline double plane_kernel(const LatticeSpec& lat, int c, double t) {
  if (t < 0.0) fail(ErrorKind::QuadratureFailure, "plane kernel needs t >= 0");
  if (has_bessel_form(lat)) {
    // Independent nearest-neighbour walks along the two axes.
    const double w = lat.edges[0].weight;
    const double p = scaled_bessel_i(0, 2.0 * w * t);
    return p * p;
  }
  return plane_kernel_bz(lat, c, t);
}

// int_0^inf (P(t) - e^{-w t}) dt/t = log w - <log sigma>.
inline double plane_volume_integral(const LatticeSpec& lat, int c) {
  const double w = lat.total_weight(c);
  return std::log(w) - bz_average(lat, c, [](double l) { return std::log(l); });
}

// int_a^inf P(t) dt/t = <E1(a sigma)>.
inline double plane_tail_integral(const LatticeSpec& lat, int c, double a) {
  if (!(a > 0.0)) fail(ErrorKind::QuadratureFailure, "tail integral needs a > 0");
  return bz_average(lat, c, [a](double l) { return l > 0.0 ? expint_e1(a * l) : 0.0; }, 1.0 / std::sqrt(a));
}

}  // namespace lapdet
