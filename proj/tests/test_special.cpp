#include <cmath>

#include <boost/math/special_functions/expint.hpp>
#include <gtest/gtest.h>

#include "lapdet/special.hpp"

using namespace lapdet;

TEST(ExpintE1, ValueAtOne) { EXPECT_NEAR(expint_e1(1.0), 0.21938393439552026, 1e-13 * 0.21938393439552026); }

TEST(ExpintE1, MatchesBoostAcrossRange) {
  for (double x : {1e-8, 1e-4, 0.01, 0.3, 0.7, 0.999, 1.0, 1.001, 2.5, 7.0, 30.0, 120.0, 600.0}) {
    const double ref = -boost::math::expint(-x);
    EXPECT_NEAR(expint_e1(x), ref, 1e-13 * ref) << "x=" << x;
  }
}

TEST(ExpintE1, Monotone) {
  double prev = expint_e1(1e-3);
  for (double x = 2e-3; x < 50; x *= 1.3) {
    const double v = expint_e1(x);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(FrullaniF, SmallArgumentLimit) {
  const double T = 64.0;
  EXPECT_NEAR(frullani_f(0.0, T), -kEulerGamma - std::log(T), 1e-15);
  for (double lam : {1e-9, 1e-6, 1e-5, 2e-5}) {
    const double direct = std::log(lam) + expint_e1(lam * T);
    EXPECT_NEAR(frullani_f(lam, T), direct, 1e-12);
  }
}

TEST(ScaledBessel, BothBranchesAgreeNearSwitch) {
  for (int nu : {0, 1, 3}) {
    const double t = 500.0;
    const double direct = std::exp(-t) * boost::math::cyl_bessel_i(nu, t);
    const double t2 = 500.0 + 1e-9;
    EXPECT_NEAR(scaled_bessel_i(nu, t2), direct, 1e-13);
  }
}

TEST(ScaledBessel, LargeArgumentAsymptotic) {
  const double t = 1e6;
  EXPECT_NEAR(scaled_bessel_i(0, t) * std::sqrt(2 * kPi * t), 1.0 + 1.0 / (8 * t), 1e-12);
}

TEST(InvSin2, SeriesMatchesDirect) {
  for (double u : {0.049, 0.051, 0.3}) {
    const double s = std::sin(u);
    EXPECT_NEAR(inv_sin2_minus_inv_u2(u), 1 / (s * s) - 1 / (u * u), 1e-11);
  }
}
