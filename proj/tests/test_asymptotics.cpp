#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "lapdet/asymptotics.hpp"
#include "lapdet/builtin_surfaces.hpp"

using namespace lapdet;

namespace {

std::vector<SweepRecord> synthetic(double a2, double a1, double c, double a0, bool boundary) {
  std::vector<SweepRecord> out;
  for (int N : default_n_grid()) {
    SweepRecord r;
    r.N = N;
    r.logdet = a2 * N * N + a1 * N + c * std::log(N) + a0;
    r.active = static_cast<std::int64_t>(N) * N;
    r.dirichlet_length = boundary ? 4.0 * N : 0.0;
    out.push_back(r);
  }
  return out;
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Fit, RecoversSyntheticCoefficients) {
  const auto f = fit(synthetic(1.16, -0.7, 0.5, -0.3, true), 1.0);
  EXPECT_NEAR(f.a2, 1.16, 1e-10);
  EXPECT_NEAR(f.a1, -0.7, 1e-10);
  EXPECT_NEAR(f.c_log, 0.5, 1e-10);
  EXPECT_NEAR(f.a0, -0.3, 1e-10);
  EXPECT_NEAR(f.C, -0.5, 1e-10);
  EXPECT_LT(f.C_uncertainty, 1e-9);
  EXPECT_NEAR(f.A_fit, 1.16, 1e-10);
}

TEST(Fit, ClosedSurfacesDropTheLinearTerm) {
  const auto f = fit(synthetic(1.16, 0.0, 2.0, -0.36, false), 0.5);
  EXPECT_EQ(f.basis, (std::vector<std::string>{"N^2", "log N", "1"}));
  EXPECT_NEAR(f.C, -2.0, 1e-10);
  // D = a0 - C log delta0.
  EXPECT_NEAR(f.D_convention, -0.36 + 2.0 * std::log(0.5), 1e-10);
  FitOptions o;
  o.assume_zero_log = true;
  EXPECT_EQ(fit(synthetic(1.0, 0.0, 0.0, 1.0, false), 1.0, o).basis, (std::vector<std::string>{"N^2", "1"}));
}

TEST(Fit, Errors) {
  auto recs = synthetic(1.0, 0.0, 1.0, 0.0, false);
  recs[3].k = 1;
  EXPECT_THROW(
      {
        try {
          fit(recs, 1.0);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::KernelJump);
          throw;
        }
      },
      Error);
  auto same = synthetic(1.0, 0.0, 1.0, 0.0, false);
  for (auto& r : same) r.N = 8;
  EXPECT_THROW(
      {
        try {
          fit(same, 1.0);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::IllConditioned);
          throw;
        }
      },
      Error);
  EXPECT_THROW(fit(std::vector<SweepRecord>(4), 1.0), Error);
}

TEST(Sweep, TorusMatchesProductFormula) {
  const auto recs = sweep(builtin_surface("torus"), normalized_lattice("square"), {2, 4});
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_NEAR(recs[0].logdet, std::log(16.0), 1e-12);
  double s = 0.0;
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k)
      if (j || k) s += std::log(2.0 - std::cos(kPi * j / 2) - std::cos(kPi * k / 2));
  EXPECT_NEAR(recs[1].logdet, s, 1e-12);
  EXPECT_EQ(recs[1].k, 1);
}

TEST(Sweep, BackendsAgree) {
  const auto spec = builtin_surface("pillowcase");
  const auto lat = normalized_lattice("square");
  SweepOptions d, s;
  d.backend = Backend::Dense;
  s.backend = Backend::Sparse;
  const auto rd = sweep(spec, lat, {6, 10}, d), rs = sweep(spec, lat, {6, 10}, s);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(rd[i].logdet, rs[i].logdet, 1e-9);
    EXPECT_EQ(rd[i].k, rs[i].k);
    EXPECT_NE(rd[i].key, rs[i].key);
  }
}

TEST(Sweep, CacheServesRepeatRuns) {
  const auto dir = fresh_dir("lapdet_cache_test");
  SweepOptions o;
  o.cache_dir = dir.string();
  o.threads = 2;
  const auto spec = builtin_surface("dsquare");
  const auto lat = normalized_lattice("square");
  const auto first = sweep(spec, lat, {4, 6, 8}, o);
  const auto second = sweep(spec, lat, {4, 6, 8}, o);
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_FALSE(first[i].cached);
    EXPECT_TRUE(second[i].cached);
    EXPECT_EQ(first[i].logdet, second[i].logdet);
    EXPECT_EQ(first[i].key, second[i].key);
  }
  // A different surface never hits those entries.
  EXPECT_FALSE(sweep(builtin_surface("nsquare"), lat, {4}, o)[0].cached);
  EXPECT_THROW(sweep(spec, lat, {8, 4}, o), Error);
  std::filesystem::remove_all(dir);
}

TEST(Sweep, DirichletSquareLogCoefficient) {
  std::vector<int> Ns;
  for (int N = 8; N <= 64; N += 8) Ns.push_back(N);
  const auto spec = builtin_surface("dsquare");
  const auto lat = normalized_lattice("square");
  const auto recs = sweep(spec, lat, Ns);
  ASSERT_EQ(recs.size(), 8u);
  for (const auto& r : recs) EXPECT_EQ(r.k, 0);
  const auto f = fit(recs, lat.delta0());
  EXPECT_FALSE(f.closed);
  EXPECT_NEAR(f.C, 0.5, 0.05);
  const auto v = compare(f, spec, lat);
  EXPECT_TRUE(v.all_pass());
  // Every-other-N subset moves C by less than the leave-one-out spread.
  std::vector<SweepRecord> sub;
  for (std::size_t i = 0; i < recs.size(); ++i)
    if (i % 2 == 1 || i < 2) sub.push_back(recs[i]);
  EXPECT_LT(std::abs(fit(sub, lat.delta0()).C - f.C), std::max(f.C_uncertainty, 1e-3));
}

TEST(Sweep, TorusConstants) {
  const auto spec = builtin_surface("torus");
  const auto lat = normalized_lattice("square");
  const auto f = fit(sweep(spec, lat, {8, 12, 16, 24, 32, 48}), lat.delta0());
  EXPECT_NEAR(f.C, -2.0, 0.05);
  const auto v = compare(f, spec, lat);
  ASSERT_EQ(v.verdicts.size(), 3u);
  for (const auto& x : v.verdicts) EXPECT_TRUE(x.pass) << x.name << " " << x.value << " vs " << x.target;
}

TEST(Sweep, JointBoundaryFitSplitsTheBoundaryTerms) {
  const auto lat = normalized_lattice("square");
  const std::vector<int> Ns{8, 12, 16, 24, 32, 40};
  std::map<std::string, ShapeSweep> s;
  for (const char* name : {"dsquare", "nsquare", "msquare"}) s[name] = {name, sweep(builtin_surface(name), lat, Ns)};
  const auto dn = joint_boundary_fit({s["dsquare"], s["nsquare"]});
  const auto dm = joint_boundary_fit({s["dsquare"], s["msquare"]});
  const auto nm = joint_boundary_fit({s["nsquare"], s["msquare"]});
  EXPECT_NEAR(dn.B_D, dm.B_D, 1e-2);
  EXPECT_NEAR(dn.B_D, nm.B_D, 1e-2);
  EXPECT_NEAR(dn.B_N, dm.B_N, 1e-2);
  EXPECT_NEAR(dn.B_N, nm.B_N, 1e-2);
  EXPECT_NEAR(dn.A, lattice_constant_A(lat), 1e-3);
  // Per-shape log coefficients survive the joint fit.
  EXPECT_NEAR(dn.C[0], 0.5, 0.05);
  EXPECT_NEAR(dm.C[1], -0.5, 0.05);
}
