#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lapdet/builtin_surfaces.hpp"
#include "lapdet/discrete_surface.hpp"

using namespace lapdet;

namespace {

int count_kind(const std::vector<Singularity>& v, SingularityKind k) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](const Singularity& s) { return s.kind == k; }));
}

double max_offdiag(const Mat& A) { return (A - identity(static_cast<int>(A.rows()))).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(SurfaceSpec, TorusParses) {
  auto s = builtin_surface("torus");
  EXPECT_EQ(s.face_count, 1);
  EXPECT_EQ(s.gluings.size(), 2u);
  EXPECT_EQ(s.rank, 1);
  EXPECT_TRUE(s.punctures.empty());
}

TEST(SurfaceSpec, PillowcaseHasFourPiCones) {
  auto s = builtin_surface("pillowcase");
  EXPECT_EQ(s.face_count, 2);
  EXPECT_EQ(s.gluings.size(), 4u);
  auto fc = build_face_complex(s);
  ASSERT_EQ(count_kind(fc.singularities, SingularityKind::Cone), 4);
  for (const auto& sg : fc.singularities) {
    EXPECT_EQ(sg.wedges, 2);
    EXPECT_NEAR(sg.angle, std::numbers::pi, 1e-15);
  }
}

TEST(SurfaceSpec, PuncturedTorusParses) {
  auto s = builtin_surface("punctured_torus");
  ASSERT_EQ(s.punctures.size(), 1u);
  EXPECT_EQ(s.rank, 1);
  EXPECT_NEAR(s.punctures[0].M(0, 0).real(), -1.0, 0.0);
}

TEST(SurfaceSpec, SchemaErrors) {
  auto j = builtin_surface_json("torus");
  j["gluings"][0]["U"] = {2.0};
  try {
    parse_surface_spec(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonUnitaryMatrix);
  }
  auto k = builtin_surface_json("torus");
  k["gluings"].push_back({{"a", {0, 0}}, {"b", {0, 1}}});
  EXPECT_THROW(build_face_complex(parse_surface_spec(k)), Error);
  auto m = builtin_surface_json("torus");
  m.erase("faces");
  try {
    parse_surface_spec(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
  }
}

TEST(SurfaceSpec, JsonRoundTrip) {
  for (const auto& name : builtin_surface_names()) {
    auto s = builtin_surface(name);
    auto t = parse_surface_spec(surface_to_json(s));
    EXPECT_EQ(surface_to_json(t), surface_to_json(s)) << name;
  }
}

TEST(Flatness, TorusClean) { EXPECT_TRUE(validate_flatness(builtin_surface("torus")).ok()); }

TEST(Flatness, AllBuiltinsWithoutPuncturesClean) {
  for (auto name : {"torus", "pillowcase", "dsquare", "nsquare", "msquare", "drect2x1", "ttorus"}) {
    auto rep = validate_flatness(builtin_surface(name));
    EXPECT_TRUE(rep.ok()) << name << ": " << (rep.ok() ? "" : rep.issues.front());
  }
}

TEST(Flatness, PillowcaseTwistedGluing) {
  auto j = builtin_surface_json("pillowcase");
  j["gluings"][0]["U"] = {-1.0};
  auto rep = validate_flatness(parse_surface_spec(j));
  ASSERT_EQ(rep.issues.size(), 2u);
  for (const auto& i : rep.issues) EXPECT_NE(i.find("holonomy defect 2 "), std::string::npos) << i;
}

TEST(Flatness, PairTorusCornerCancelledByCut) {
  EXPECT_TRUE(validate_flatness(builtin_surface("punctured_torus_pair")).ok());
  auto j = builtin_surface_json("punctured_torus_pair");
  j.erase("punctures");
  auto rep = validate_flatness(parse_surface_spec(j));
  ASSERT_EQ(rep.issues.size(), 1u);
  EXPECT_NE(rep.issues[0].find("holonomy defect 2 "), std::string::npos);
}

// A cut ending inside a glued edge leaves a second singular point there.
TEST(Flatness, PuncturedTorusReportsDanglingCut) {
  auto rep = validate_flatness(builtin_surface("punctured_torus"));
  ASSERT_EQ(rep.issues.size(), 1u);
  EXPECT_NE(rep.issues[0].find("ends inside glued edge"), std::string::npos);
  auto j = builtin_surface_json("punctured_torus");
  j["punctures"][0]["M"] = {1.0};
  EXPECT_TRUE(validate_flatness(parse_surface_spec(j)).ok());
}

TEST(Discretize, TorusCounts) {
  auto ds = discretize(builtin_surface("torus"), normalized_lattice("square"), 4);
  EXPECT_EQ(ds.n_active(), 16);
  EXPECT_EQ(ds.edges.size(), 64u);  // 32 undirected edges
  for (const auto& e : ds.edges) {
    EXPECT_EQ(e.sign, 0);
    EXPECT_LT(max_offdiag(e.U), 1e-15);
    EXPECT_NE(e.to, e.from);
  }
  for (double w : ds.w) EXPECT_DOUBLE_EQ(w, 2.0);
  EXPECT_EQ(ds.counts.dirichlet_length, Rat(0));
  EXPECT_EQ(ds.counts.neumann_length, Rat(0));
}

TEST(Discretize, TorusCountIsNSquared) {
  for (int N : {2, 3, 5, 8}) {
    for (auto lat : {"square", "shifted_square"}) {
      auto ds = discretize(builtin_surface("torus"), normalized_lattice(lat), N);
      EXPECT_EQ(ds.counts.active, N * N) << lat << " N=" << N;
      EXPECT_EQ(ds.counts.volume_weighted, Rat(N * N));
    }
  }
}

TEST(Discretize, DirichletSquareInterior) {
  auto ds = discretize(builtin_surface("dsquare"), normalized_lattice("square"), 4);
  EXPECT_EQ(ds.n_active(), 9);
  EXPECT_EQ(ds.counts.dirichlet_length, Rat(16));
  // Edges to removed boundary vertices remain as diagonal terms.
  int removed = 0;
  for (const auto& e : ds.edges) removed += e.to < 0;
  EXPECT_EQ(removed, 12);
}

TEST(Discretize, DirichletSquareShifted) {
  for (int N : {2, 4, 7}) {
    auto ds = discretize(builtin_surface("dsquare"), normalized_lattice("shifted_square"), N);
    EXPECT_EQ(ds.counts.active, N * N);
    EXPECT_EQ(ds.counts.dirichlet_length, Rat(4 * N));
    int reflected = 0;
    for (const auto& e : ds.edges)
      if (e.sign == -1) ++reflected;
    EXPECT_EQ(reflected, 4 * N);
  }
}

TEST(Discretize, NeumannSquareWeights) {
  for (int N : {2, 4, 6}) {
    auto ds = discretize(builtin_surface("nsquare"), normalized_lattice("square"), N);
    EXPECT_EQ(ds.counts.active, (N + 1) * (N + 1));
    EXPECT_EQ(ds.counts.volume_weighted, Rat(N * N));
    EXPECT_EQ(ds.counts.neumann_length, Rat(4 * N));
    for (double w : ds.w) EXPECT_DOUBLE_EQ(w, 2.0);
  }
}

TEST(Discretize, PillowcaseConeTips) {
  auto ds = discretize(builtin_surface("pillowcase"), normalized_lattice("square"), 4);
  int tips = 0;
  for (const auto& s : ds.singularities) {
    ASSERT_EQ(s.kind, SingularityKind::Cone);
    EXPECT_TRUE(s.vertex_at_tip);
    EXPECT_EQ(s.wedges, 2);
    ++tips;
  }
  EXPECT_EQ(tips, 4);
  int tagged = 0;
  for (int a = 0; a < ds.n_active(); ++a)
    if (ds.vertex(a).tags & kConeTip) {
      ++tagged;
      EXPECT_EQ(ds.vertex(a).charts.size(), 2u);
    }
  EXPECT_EQ(tagged, 4);
  EXPECT_EQ(ds.counts.active, 2 * 16 + 2);
  auto sh = discretize(builtin_surface("pillowcase"), normalized_lattice("shifted_square"), 4);
  for (const auto& s : sh.singularities) EXPECT_FALSE(s.vertex_at_tip);
}

TEST(Discretize, QuadraticGrowth) {
  struct Case {
    const char* surface;
    const char* lattice;
  };
  for (auto c : {Case{"torus", "square"}, Case{"pillowcase", "square"}, Case{"dsquare", "square"},
                 Case{"nsquare", "shifted_square"}, Case{"msquare", "square"}, Case{"ttorus", "triangular"},
                 Case{"ttorus", "hexagonal"}, Case{"drect2x1", "shifted_square"}}) {
    auto spec = builtin_surface(c.surface);
    auto lat = normalized_lattice(c.lattice);
    std::vector<std::int64_t> n;
    for (int N = 6; N <= 8; ++N) n.push_back(discretize(spec, lat, N).counts.active);
    const double area = lat.cell_area() * spec.face_count * (spec.face_kind == CellKind::Triangulation ? 0.5 : 1.0) /
                        lat.cell_area();
    const double a = area * lat.cell_area() / (lat.delta0() * lat.delta0());
    EXPECT_NEAR(static_cast<double>(n[2] - 2 * n[1] + n[0]), 2.0 * a, 1e-9) << c.surface << "/" << c.lattice;
  }
}

TEST(Discretize, ConnectionIsInverseOnReverse) {
  for (auto name : {"torus", "pillowcase", "msquare", "punctured_torus", "punctured_torus_pair", "ttorus"}) {
    auto spec = builtin_surface(name);
    const bool tri = spec.face_kind == CellKind::Triangulation;
    auto ds = discretize(spec, normalized_lattice(tri ? "hexagonal" : (spec.rank == 2 ? "shifted_square" : "square")), 8);
    std::multimap<std::pair<int, int>, const DEdge*> by;
    for (const auto& e : ds.edges)
      if (e.sign == 0 && e.to >= 0) by.emplace(std::make_pair(e.from, e.to), &e);
    for (const auto& [k, e] : by) {
      auto range = by.equal_range({k.second, k.first});
      double best = 1e9;
      for (auto it = range.first; it != range.second; ++it)
        best = std::min(best, (it->second->U - e->U.adjoint()).cwiseAbs().maxCoeff() + std::abs(it->second->w - e->w));
      EXPECT_LT(best, 1e-14) << name << " " << k.first << "->" << k.second;
    }
  }
}

TEST(Discretize, CutEdgesCarryMonodromy) {
  auto ds = discretize(builtin_surface("punctured_torus"), normalized_lattice("square"), 4);
  int crossing = 0;
  for (const auto& e : ds.edges)
    if (std::abs(e.U(0, 0).real() + 1.0) < 1e-15) ++crossing;
  // Cut from the cell centre (2.5, 2.5) down to y = 0 crosses two horizontal edges, each twice.
  EXPECT_EQ(crossing, 4);
}

TEST(Discretize, MixedSquareCorners) {
  auto ds = discretize(builtin_surface("msquare"), normalized_lattice("square"), 4);
  ASSERT_EQ(count_kind(ds.singularities, SingularityKind::Corner), 4);
  for (const auto& s : ds.singularities) {
    EXPECT_NE(s.b, s.b_hat);
    EXPECT_NEAR(s.angle, std::numbers::pi / 2, 1e-15);
  }
  EXPECT_EQ(ds.counts.dirichlet_length, Rat(8));
  EXPECT_EQ(ds.counts.neumann_length, Rat(8));
  EXPECT_EQ(ds.counts.active, 5 * 3);
}

TEST(Discretize, SplitNeedsDivisibility) {
  auto j = builtin_surface_json("dsquare");
  j.erase("default_bc");
  j["boundary"] = {{{"face", 0}, {"edge", 0}, {"split", {{"frac", {1, 3}}, {"before", "D"}, {"after", "N"}}}},
                   {{"face", 0}, {"edge", 1}, {"bc", "D"}},
                   {{"face", 0}, {"edge", 2}, {"bc", "D"}},
                   {{"face", 0}, {"edge", 3}, {"bc", "D"}}};
  auto spec = parse_surface_spec(j);
  try {
    discretize(spec, normalized_lattice("square"), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MeshIncompatible);
  }
  auto ds = discretize(spec, normalized_lattice("square"), 6);
  EXPECT_EQ(ds.counts.neumann_length, Rat(4));
  EXPECT_EQ(count_kind(ds.singularities, SingularityKind::Corner), 5);
}

TEST(Discretize, RelabellingKeepsSignature) {
  auto ds = discretize(builtin_surface("msquare"), normalized_lattice("square"), 5);
  auto sig = canonical_signature(ds);
  std::vector<int> perm(ds.n_active());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 rng(7);
  std::shuffle(perm.begin(), perm.end(), rng);
  DiscreteSurface p = ds;
  for (int a = 0; a < ds.n_active(); ++a) {
    p.active[perm[a]] = ds.active[a];
    p.w[perm[a]] = ds.w[a];
  }
  for (auto& e : p.edges) {
    e.from = perm[e.from];
    if (e.to >= 0) e.to = perm[e.to];
  }
  EXPECT_EQ(canonical_signature(p), sig);
  auto other = discretize(builtin_surface("dsquare"), normalized_lattice("square"), 5);
  EXPECT_NE(canonical_signature(other), sig);
}

TEST(Discretize, AdjacencyExport) {
  auto ds = discretize(builtin_surface("torus"), normalized_lattice("square"), 2);
  std::ostringstream os;
  write_adjacency_csv(ds, os);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 16);
  auto h = discrete_header_json(ds);
  EXPECT_EQ(h["counts"]["active"], 4);
}

TEST(Discretize, TriangularLattices) {
  auto spec = builtin_surface("ttorus");
  for (int N : {3, 4}) {
    auto t = discretize(spec, normalized_lattice("triangular"), N);
    EXPECT_EQ(t.counts.active, N * N);
    for (double w : t.w) EXPECT_NEAR(w, 6.0 / (2.0 * std::sqrt(3.0)), 1e-15);
    auto h = discretize(spec, normalized_lattice("hexagonal"), N);
    EXPECT_EQ(h.counts.active, 2 * N * N);
    EXPECT_EQ(h.edges.size(), static_cast<std::size_t>(6 * N * N));
  }
}
