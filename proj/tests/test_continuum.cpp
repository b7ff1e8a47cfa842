#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "lapdet/continuum.hpp"

using namespace lapdet;
using cd = std::complex<double>;

TEST(Continuum, SquareTorusValue) {
  // log |eta(i)|^4 + log 2 with eta(i) = Gamma(1/4) / (2 pi^{3/4}).
  const double eta = std::tgamma(0.25) / (2.0 * std::pow(kPi, 0.75));
  const auto d = torus_zeta_det(cd(0, 1), 1.0, 0.5);
  EXPECT_NEAR(d.logdet, 4.0 * std::log(eta) + std::log(2.0), 1e-13);
  EXPECT_NEAR(d.logdet, -0.36154110, 1e-8);
  EXPECT_NEAR(d.logdet, d.logdet_alt, 1e-11);
}

TEST(Continuum, TorusRoutesAgreeAcrossModuli) {
  for (cd tau : {cd(0.3, 1.1), cd(-0.5, 0.866), cd(0.1, 3.0), cd(0.45, 0.2)})
    for (double scale : {0.5, 1.0, 3.0})
      for (double c : {0.5, 1.0}) {
        const auto d = torus_zeta_det(tau, scale, c);
        EXPECT_NEAR(d.logdet, d.logdet_alt, 1e-10) << tau << " " << scale << " " << c;
      }
}

TEST(Continuum, TorusScalingRules) {
  const cd tau(0.3, 1.1);
  const double base = torus_zeta_det(tau, 1.0, 1.0).logdet;
  // zeta(0) = -1 gives log det(c L) = log det(L) - log c.
  EXPECT_NEAR(torus_zeta_det(tau, 1.0, 0.5).logdet, base + std::log(2.0), 1e-12);
  EXPECT_NEAR(torus_logdet_theta(tau, 2.0, 1.0), base + std::log(4.0), 1e-10);
  // Modular invariance.
  EXPECT_NEAR(torus_logdet_theta(-1.0 / tau, 1.0, 1.0), base, 1e-10);
  EXPECT_NEAR(torus_logdet_theta(tau + 1.0, 1.0, 1.0), base, 1e-10);
}

TEST(Continuum, WeylLaw) {
  const double area = 2.25, c = 0.5;
  for (double t : {1e-2, 1e-3}) {
    const double th = torus_heat_trace(cd(0.2, 1.3), std::sqrt(area), c, t);
    EXPECT_NEAR(th * 4.0 * kPi * c * t / area, 1.0, 1e-12);
  }
  // The two branches of the heat trace agree at the switch point.
  const double t0 = area / (4.0 * kPi * c);
  EXPECT_NEAR(torus_heat_trace(cd(0.2, 1.3), 1.5, c, t0 * (1 - 1e-12)),
              torus_heat_trace(cd(0.2, 1.3), 1.5, c, t0), 1e-9);
}

TEST(Continuum, RectangleRoutesAgree) {
  for (BC bc : {BC::Dirichlet, BC::Neumann})
    for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {0.3, 1.7}})
      for (double c : {0.5, 1.0}) {
        const auto d = rectangle_zeta_det(a, b, bc, c);
        EXPECT_NEAR(d.logdet, d.logdet_alt, 1e-10);
        EXPECT_NEAR(d.logdet, rectangle_zeta_det(b, a, bc, c).logdet, 1e-10);
      }
}

TEST(Continuum, RectangleScaling) {
  // Doubling both sides multiplies eigenvalues by 1/4: shift by -zeta(0) log 4.
  for (BC bc : {BC::Dirichlet, BC::Neumann}) {
    const auto d1 = rectangle_zeta_det(1.0, 1.5, bc), d2 = rectangle_zeta_det(2.0, 3.0, bc);
    EXPECT_NEAR(d2.logdet, d1.logdet - d1.zeta0 * std::log(4.0), 1e-10);
  }
}

TEST(Continuum, RejectsBadInput) {
  EXPECT_THROW(torus_zeta_det(cd(0.0, -1.0)), Error);
  EXPECT_THROW(rectangle_zeta_det(-1.0, 1.0, BC::Dirichlet), Error);
}

TEST(Continuum, UnitDirichletSquareValue) {
  // Independent high-precision quadrature of the heat trace.
  EXPECT_NEAR(rectangle_zeta_det(1.0, 1.0, BC::Dirichlet).logdet, -0.6102456605288906, 1e-12);
}
