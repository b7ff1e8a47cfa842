#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lapdet/builtin_surfaces.hpp"
#include "lapdet/constants.hpp"

using namespace lapdet;

namespace {

constexpr double pi = kPi;

Mat scalar(cplx z) { return Mat::Constant(1, 1, z); }

Mat random_unitary(int d, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Mat A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(A);
  return qr.householderQ() * Mat::Identity(d, d);
}

// Direct series; the non-oscillating part of the remainder is 1/(K + 1/2).
double puncture_series(const Mat& M, int K) {
  const int d = static_cast<int>(M.rows());
  Mat P = identity(d);
  double s = 0.0;
  for (int k = 1; k <= K; ++k) {
    P = P * M;
    s += (1.0 - P.trace().real() / d) / (double(k) * k);
  }
  return (s + 1.0 / (K + 0.5)) / (pi * pi);
}

// Catalan's constant by the alternating series with pairwise averaging.
double catalan() {
  long double s = 0.0L, prev = 0.0L;
  const int K = 2000000;
  for (int k = 0; k < K; ++k) {
    prev = s;
    const long double t = 1.0L / ((2.0L * k + 1) * (2.0L * k + 1));
    s += (k % 2 ? -t : t);
  }
  return static_cast<double>((s + prev) / 2.0L);
}

// log det* of the periodic N x N lattice by the product formula.
double torus_logdet(const LatticeSpec& lat, int N) {
  double s = 0.0;
  for (int j = 0; j < N; ++j)
    for (int l = 0; l < N; ++l) {
      if (j == 0 && l == 0) continue;
      const double k1 = 2 * pi * j / N, k2 = 2 * pi * l / N;
      double sig = 0.0;
      for (const auto& e : lat.edges) sig += e.weight * (1.0 - std::cos(k1 * e.m + k2 * e.n));
      s += std::log(sig);
    }
  return s;
}

// Fit logdet*(N) = A N^2 + c log N + D at three sizes.
double torus_extrapolated_A(const LatticeSpec& lat) {
  const int Ns[3] = {256, 384, 512};
  Eigen::Matrix3d X;
  Eigen::Vector3d y;
  for (int i = 0; i < 3; ++i) {
    X(i, 0) = double(Ns[i]) * Ns[i];
    X(i, 1) = std::log(double(Ns[i]));
    X(i, 2) = 1.0;
    y(i) = torus_logdet(lat, Ns[i]);
  }
  return X.fullPivLu().solve(y)(0);
}

}  // namespace

TEST(Cone, Values) {
  EXPECT_NEAR(c_cone(2 * pi), 0.0, 1e-15);
  EXPECT_NEAR(c_cone(pi), -0.25, 1e-15);
  EXPECT_NEAR(c_cone(1.5 * pi), 1.0 / 8 - 2.0 / 9, 1e-15);
}

TEST(Corner, Values) {
  EXPECT_NEAR(c_corner(pi / 2, BC::Dirichlet, BC::Dirichlet), -0.125, 1e-15);
  EXPECT_NEAR(c_corner(pi / 2, BC::Neumann, BC::Neumann), -0.125, 1e-15);
  EXPECT_NEAR(c_corner(pi, BC::Dirichlet, BC::Dirichlet), 0.0, 1e-15);
  EXPECT_NEAR(c_corner(pi, BC::Neumann, BC::Dirichlet), 0.125, 1e-15);
  EXPECT_NEAR(c_corner(pi / 2, BC::Dirichlet, BC::Neumann), 1.0 / 24 + 1.0 / 12, 1e-15);
}

TEST(Puncture, KnownMonodromies) {
  EXPECT_NEAR(c_puncture(identity(1)), 0.0, 1e-15);
  EXPECT_NEAR(c_puncture(identity(3)), 0.0, 1e-15);
  EXPECT_NEAR(c_puncture(scalar(-1.0)), 0.25, 1e-15);
  EXPECT_NEAR(c_puncture(scalar(std::polar(1.0, 2 * pi / 3))), 2.0 / 9, 1e-14);
  EXPECT_NEAR(c_puncture(-identity(2)), 0.25, 1e-15);
}

TEST(Puncture, DilogMatchesSeries) {
  for (int d = 1; d <= 3; ++d)
    for (unsigned seed = 1; seed <= 4; ++seed) {
      const Mat M = random_unitary(d, seed * 7 + d);
      const int K = 200000;
      EXPECT_NEAR(c_puncture(M), puncture_series(M, K), 1e-9);
      EXPECT_GT(c_puncture(M), 0.0);
    }
}

TEST(ContinuumI, Values) {
  EXPECT_NEAR(continuum_i_universal_cover(2 * pi), 1.0 / (4 * pi * pi * pi), 1e-16);
  EXPECT_NEAR(continuum_i_cone(2 * pi), 0.0, 1e-16);
  EXPECT_NEAR(continuum_i_cone(pi), 1.0 / (4 * pi), 1e-16);
  EXPECT_NEAR(continuum_i_halfplane(BC::Dirichlet), -1.0 / (4 * pi), 1e-16);
  EXPECT_NEAR(continuum_i_halfplane(BC::Neumann), 1.0 / (4 * pi), 1e-16);
  const Mat M = random_unitary(2, 3);
  Mat P = identity(2);
  double s = 0.0;
  for (int k = 1; k <= 200000; ++k) {
    P = P * M;
    s += (P.trace().real() - 2.0) / (double(k) * k);
  }
  s -= 2.0 / (200000 + 0.5);
  EXPECT_NEAR(continuum_i_puncture(M), s / (2 * pi * pi * pi), 1e-10);
}

TEST(CornerAssembly, WedgeImageSumMatchesBruteForce) {
  // Direct sum over the dihedral images on the universal cover.
  for (double alpha : {pi / 3, pi / 2, 1.5 * pi}) {
    for (int s0 : {-1, 1})
      for (int s1 : {-1, 1}) {
        const double th = 0.37 * alpha;
        double direct = 0.0;
        const int K = 200000;
        for (int k = -K; k <= K; ++k) {
          const double sg = (s0 * s1 == -1 && (k % 2)) ? -1.0 : 1.0;
          if (k != 0) direct += sg / (pi * std::pow(2 * alpha * k, 2)) - 1.0 / (pi * std::pow(2 * pi * k, 2));
          direct += s0 * sg / (pi * std::pow(2 * th - 2 * alpha * k, 2));
        }
        // Remainders of the non-alternating parts.
        const double tail = 2.0 / (K + 0.5);
        direct -= tail / (4 * pi * pi * pi);
        if (s0 * s1 == 1) direct += tail * (1.0 + s0) / (4 * pi * alpha * alpha);
        EXPECT_NEAR(detail::wedge_i(alpha, s0, s1, th, false), direct, 1e-9) << alpha << " " << s0 << s1;
      }
  }
}

TEST(CornerAssembly, AllAnglesAndConditions) {
  const std::vector<double> angles{pi / 3, pi / 2, 2 * pi / 3, pi, 4 * pi / 3, 1.5 * pi, 2 * pi, 3 * pi};
  const BC bcs[2] = {BC::Dirichlet, BC::Neumann};
  for (double a : angles)
    for (BC b : bcs)
      for (BC bh : bcs) {
        const auto r = corner_assembly_check(a, b, bh);
        EXPECT_NEAR(r.c_p, c_corner(a, b, bh), 1e-12) << a << bc_char(b) << bc_char(bh);
        if (r.has_closed) EXPECT_NEAR(r.hat, r.hat_closed, 1e-12);
      }
}

TEST(CornerAssembly, QuarterPlaneCotangentsCancel) {
  const auto r = corner_assembly_check(pi / 2, BC::Dirichlet, BC::Dirichlet);
  EXPECT_NEAR(r.c_p, -0.125, 1e-13);
  // hat C alone still carries the -cot(pi/4)/2pi pieces.
  EXPECT_NEAR(r.hat, 2 * (1.0 / 12 - 1.0 / 48) - 1.0 / (2 * pi), 1e-13);
}

TEST(CornerAssembly, MixedQuarterPlane) {
  const auto r = corner_assembly_check(pi / 2, BC::Dirichlet, BC::Neumann);
  EXPECT_NEAR(r.c_p, 0.125, 1e-13);
}

TEST(LatticeA, SquareIsCatalanFormula) {
  const double G = catalan();
  EXPECT_NEAR(G, 0.915965594177219015, 1e-12);
  EXPECT_NEAR(lattice_constant_A(normalized_lattice("square")), 4 * G / pi - std::log(2.0), 1e-11);
  EXPECT_NEAR(lattice_constant_A(normalized_lattice("shifted_square")), 4 * G / pi - std::log(2.0), 1e-11);
}

TEST(LatticeA, SquareMatchesTimeIntegral) {
  // int_0^inf (P - e^{-w t}) dt/t with the Bessel kernel; P ~ 1/(2 pi t) past T.
  const auto lat = normalized_lattice("square");
  const double w = lat.total_weight(0);
  const double T = 4000.0;
  auto f = [&](double u) {
    const double t = std::exp(u);
    return plane_kernel(lat, 0, t) - std::exp(-w * t);
  };
  double err = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -40.0, std::log(T), 20, 1e-14, &err);
  // Tail: P = (2 pi t)^{-1} (1 + 1/(4t) + 5/(32 t^2) + ...).
  v += (1.0 + 1.0 / (8 * T) + 5.0 / (96 * T * T)) / (2 * pi * T);
  const double A = -(v - std::log(w));
  EXPECT_NEAR(A, lattice_constant_A(lat), 1e-9);
}

TEST(LatticeA, TorusExtrapolation) {
  for (const char* name : {"square", "triangular"}) {
    const auto lat = normalized_lattice(name);
    EXPECT_NEAR(lattice_constant_A(lat), torus_extrapolated_A(lat), 1e-6) << name;
  }
}

TEST(LatticeA, HexagonalAgreesWithTorusPerVertex) {
  const auto lat = normalized_lattice("hexagonal");
  // Two vertices per cell; log det Sigma(k) summed over the torus of cells.
  auto logdet = [&](int N) {
    double s = 0.0;
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        const Eigen::MatrixXcd S = bloch_symbol(lat, 2 * pi * j / N, 2 * pi * l / N);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S);
        for (int i = 0; i < 2; ++i)
          if (es.eigenvalues()(i) > 1e-12) s += std::log(es.eigenvalues()(i));
      }
    return s;
  };
  const int Ns[3] = {128, 192, 256};
  Eigen::Matrix3d X;
  Eigen::Vector3d y;
  for (int i = 0; i < 3; ++i) {
    X(i, 0) = 2.0 * Ns[i] * Ns[i];
    X(i, 1) = std::log(double(Ns[i]));
    X(i, 2) = 1.0;
    y(i) = logdet(Ns[i]);
  }
  EXPECT_NEAR(lattice_constant_A(lat), X.fullPivLu().solve(y)(0), 1e-6);
}

TEST(LatticeA, DoublingWeightsShiftsByLog2) {
  for (const char* name : {"square", "triangular", "hexagonal"}) {
    auto lat = normalized_lattice(name);
    const double A = lattice_constant_A(lat);
    for (auto& e : lat.edges) e.weight *= 2.0;
    EXPECT_NEAR(lattice_constant_A(lat) - A, std::log(2.0), 1e-10) << name;
  }
}

TEST(TheoremC, Surfaces) {
  EXPECT_NEAR(theorem_C(builtin_surface("torus"), 1), -2.0, 1e-15);
  EXPECT_NEAR(theorem_C(builtin_surface("dsquare"), 0), 0.5, 1e-15);
  EXPECT_NEAR(theorem_C(builtin_surface("nsquare"), 1), -1.5, 1e-15);
  EXPECT_NEAR(theorem_C(builtin_surface("msquare"), 0), -4 * 0.125, 1e-15);
  EXPECT_NEAR(theorem_C(builtin_surface("pillowcase"), 1), -1.0, 1e-15);
  EXPECT_NEAR(theorem_C(builtin_surface("punctured_torus_pair"), 0), -0.5, 1e-15);
}
