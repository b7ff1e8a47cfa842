#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lapdet/lattice.hpp"

using namespace lapdet;

TEST(Lattice, BuiltinCountsAndDelta0) {
  auto sq = builtin_lattice("square");
  EXPECT_EQ(sq.class_count(), 1);
  EXPECT_EQ(sq.edges_from(0).size(), 4u);
  EXPECT_DOUBLE_EQ(sq.delta0(), 1.0);

  auto tri = builtin_lattice("triangular");
  EXPECT_EQ(tri.edges_from(0).size(), 6u);
  EXPECT_NEAR(tri.delta0(), std::pow(3.0, 0.25) / std::sqrt(2.0), 1e-15);

  auto hex = builtin_lattice("hexagonal");
  EXPECT_EQ(hex.class_count(), 2);
  EXPECT_EQ(hex.edges_from(0).size(), 3u);
  EXPECT_NEAR(hex.delta0(), std::pow(3.0, 0.25) / 2.0, 1e-15);
}

TEST(Lattice, BuiltinsAreSymmetric) {
  for (auto name : {"square", "shifted_square", "triangular", "hexagonal"}) {
    auto rep = validate_symmetry(builtin_lattice(name));
    EXPECT_TRUE(rep.ok()) << name << ": " << (rep.issues.empty() ? "" : rep.issues.front());
  }
}

TEST(Lattice, PerturbedWeightIsReported) {
  auto s = builtin_lattice("square");
  s.edges[0].weight = 1.1;
  auto rep = validate_symmetry(s);
  ASSERT_FALSE(rep.ok());
  EXPECT_NE(rep.issues.front().find("w=1.1"), std::string::npos);
}

TEST(Lattice, NormalizedWeights) {
  EXPECT_DOUBLE_EQ(normalize_weights(builtin_lattice("square")).edges[0].weight, 0.5);
  // sum_k w cos^2(k pi/3) = 3w must equal delta0^2 = sqrt(3)/2.
  EXPECT_NEAR(normalize_weights(builtin_lattice("triangular")).edges[0].weight, 1.0 / (2.0 * std::sqrt(3.0)), 1e-15);
  EXPECT_NEAR(normalize_weights(builtin_lattice("hexagonal")).edges[0].weight, std::sqrt(3.0) / 2.0, 1e-15);
}

TEST(Lattice, NormalizeIsIdempotent) {
  for (auto name : {"square", "triangular", "hexagonal"}) {
    auto once = normalize_weights(builtin_lattice(name));
    auto twice = normalize_weights(once);
    for (std::size_t i = 0; i < once.edges.size(); ++i) EXPECT_EQ(once.edges[i].weight, twice.edges[i].weight);
    EXPECT_TRUE(is_normalized(once));
  }
}

TEST(Lattice, NonScalarCovarianceRejected) {
  auto s = builtin_lattice("square");
  s.edges[0].weight = s.edges[2].weight = 2.0;
  EXPECT_THROW(normalize_weights(s), Error);
}

TEST(Lattice, JsonRoundTrip) {
  auto hex = normalize_weights(builtin_lattice("hexagonal"));
  auto back = lattice_from_json(lattice_to_json(hex));
  ASSERT_EQ(back.vertices.size(), hex.vertices.size());
  EXPECT_EQ(back.vertices[1], hex.vertices[1]);
  EXPECT_EQ(back.edges.size(), hex.edges.size());
  EXPECT_DOUBLE_EQ(back.edges[3].weight, hex.edges[3].weight);
  EXPECT_TRUE(validate_symmetry(back).ok());
}

TEST(Lattice, RotatedCoordinatesGiveSameCanonicalForm) {
  auto tri = builtin_lattice("triangular");
  std::vector<QVec> a, b;
  for (const auto& e : tri.edges) {
    a.push_back(tri.edge_vector(e));
    b.push_back(rotation_generator(tri.cell_kind)(tri.edge_vector(e)));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

// Walk displacement over unit walk-time has covariance delta0^2 Id.
TEST(Lattice, MonteCarloCovariance) {
  std::mt19937_64 rng(12345);
  for (auto name : {"square", "triangular", "hexagonal"}) {
    auto s = normalize_weights(builtin_lattice(name));
    const double d2 = s.delta0() * s.delta0();
    const int samples = 200000;
    double sxx = 0, syy = 0, sxy = 0, qxx = 0, qxy = 0;
    for (int i = 0; i < samples; ++i) {
      int c = 0;
      double x = 0, y = 0, t = 0;
      while (true) {
        const double rate = s.total_weight(c);
        t += std::exponential_distribution<double>(rate)(rng);
        if (t > 1.0) break;
        double u = std::uniform_real_distribution<double>(0, rate)(rng);
        for (const auto* e : s.edges_from(c)) {
          if ((u -= e->weight) > 0) continue;
          auto z = embed(s.cell_kind, s.edge_vector(*e));
          x += z.real();
          y += z.imag();
          c = e->to;
          break;
        }
      }
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
      qxx += x * x * x * x;
      qxy += x * x * y * y;
    }
    const double mxx = sxx / samples;
    const double se = std::sqrt((qxx / samples - mxx * mxx) / samples);
    const double se_xy = std::sqrt(qxy / samples / samples);
    EXPECT_NEAR(sxx / samples, d2, 3 * se) << name;
    EXPECT_NEAR(syy / samples, d2, 3 * se) << name;
    EXPECT_NEAR(sxy / samples, 0.0, 3 * se_xy) << name;
  }
}
