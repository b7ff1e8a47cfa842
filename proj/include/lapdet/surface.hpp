#pragma once
// Surfaces glued from unit squares or unit equilateral triangles.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lapdet/errors.hpp"
#include "lapdet/geometry.hpp"
#include "lapdet/lattice.hpp"
#include "lapdet/linalg.hpp"

namespace lapdet {

enum class BC { Dirichlet, Neumann };

inline int bc_sign(BC b) { return b == BC::Neumann ? 1 : -1; }
inline char bc_char(BC b) { return b == BC::Neumann ? 'N' : 'D'; }

struct Gluing {
  int fa = 0, ea = 0, fb = 0, eb = 0;
  bool flip = false;
  Mat U;  // transport from face a to face b
};

struct EdgeCondition {
  int face = 0, edge = 0;
  BC before = BC::Dirichlet;  // near the start corner of the edge
  BC after = BC::Dirichlet;   // near the end corner
  Rat split{1};               // fraction where the condition changes; 1 if it does not
};

struct Puncture {
  int face = 0;
  QVec pos;  // unit-face basis coordinates
  Mat M;     // holonomy of a counterclockwise loop
  QVec cut;  // direction of the cut ray
};

struct SurfaceSpec {
  CellKind face_kind = CellKind::Quadrangulation;
  int face_count = 1;
  std::vector<Gluing> gluings;
  std::vector<EdgeCondition> boundary;
  std::vector<Puncture> punctures;
  int rank = 1;
};

inline int side_count(CellKind k) { return k == CellKind::Quadrangulation ? 4 : 3; }

inline const std::vector<QVec>& unit_corners(CellKind k) {
  static const std::vector<QVec> sq{{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(1), Rat(1)}, {Rat(0), Rat(1)}};
  static const std::vector<QVec> tr{{Rat(0), Rat(0)}, {Rat(1), Rat(0)}, {Rat(0), Rat(1)}};
  return k == CellKind::Quadrangulation ? sq : tr;
}

// Closed face scaled by n, in basis coordinates.
inline bool in_closed_face(CellKind k, const QVec& p, const Rat& n) {
  if (p.a < 0 || p.b < 0) return false;
  if (k == CellKind::Quadrangulation) return p.a <= n && p.b <= n;
  return p.a + p.b <= n;
}

inline bool in_open_face(CellKind k, const QVec& p, const Rat& n) {
  if (p.a <= 0 || p.b <= 0) return false;
  if (k == CellKind::Quadrangulation) return p.a < n && p.b < n;
  return p.a + p.b < n;
}

// Euclidean reflection of y across the line through A with direction u.
inline QVec reflect_across(CellKind k, const QVec& y, const QVec& A, const QVec& u) {
  const QVec r = y - A;
  const Rat c = dot(k, r, u) / dot(k, u, u);
  return A + Rat(2) * (c * u) - r;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline BC parse_bc(const nlohmann::json& j) {
  const std::string s = j.get<std::string>();
  if (s == "D" || s == "Dirichlet") return BC::Dirichlet;
  if (s == "N" || s == "Neumann") return BC::Neumann;
  fail(ErrorKind::SchemaError, "bc must be D or N, got '" + s + "'");
}

}  // namespace detail

inline SurfaceSpec parse_surface_spec(const nlohmann::json& doc) {
  SurfaceSpec s;
  try {
    const std::string fk = doc.at("face_kind").get<std::string>();
    if (fk == "square") s.face_kind = CellKind::Quadrangulation;
    else if (fk == "triangle") s.face_kind = CellKind::Triangulation;
    else fail(ErrorKind::SchemaError, "face_kind must be square or triangle");
    s.face_count = doc.at("faces").get<int>();
    s.rank = doc.value("rank", 1);
    if (s.face_count < 1) fail(ErrorKind::SchemaError, "faces must be >= 1");
    if (s.rank < 1 || s.rank > kMaxRank) fail(ErrorKind::SchemaError, "rank must be in 1.." + std::to_string(kMaxRank));
    const int sides = side_count(s.face_kind);
    auto check_fe = [&](int f, int e) {
      if (f < 0 || f >= s.face_count || e < 0 || e >= sides)
        fail(ErrorKind::SchemaError, "face/edge index out of range: [" + std::to_string(f) + "," + std::to_string(e) + "]");
    };
    for (const auto& g : doc.value("gluings", nlohmann::json::array())) {
      Gluing gl;
      gl.fa = g.at("a").at(0).get<int>();
      gl.ea = g.at("a").at(1).get<int>();
      gl.fb = g.at("b").at(0).get<int>();
      gl.eb = g.at("b").at(1).get<int>();
      check_fe(gl.fa, gl.ea);
      check_fe(gl.fb, gl.eb);
      gl.flip = g.value("flip", false);
      gl.U = g.contains("U") ? matrix_from_json(g.at("U"), s.rank) : identity(s.rank);
      if (!is_unitary(gl.U)) fail(ErrorKind::NonUnitaryMatrix, "gluing matrix is not unitary");
      s.gluings.push_back(gl);
    }
    std::optional<BC> default_bc;
    if (doc.contains("default_bc")) default_bc = detail::parse_bc(doc.at("default_bc"));
    for (const auto& b : doc.value("boundary", nlohmann::json::array())) {
      EdgeCondition ec;
      ec.face = b.at("face").get<int>();
      ec.edge = b.at("edge").get<int>();
      check_fe(ec.face, ec.edge);
      if (b.contains("split")) {
        const auto& sp = b.at("split");
        const auto fr = sp.at("frac");
        ec.split = Rat(fr.at(0).get<std::int64_t>(), fr.at(1).get<std::int64_t>());
        if (ec.split <= 0 || ec.split >= 1) fail(ErrorKind::SchemaError, "split fraction must lie in (0,1)");
        ec.before = detail::parse_bc(sp.at("before"));
        ec.after = detail::parse_bc(sp.at("after"));
      } else {
        ec.before = ec.after = detail::parse_bc(b.at("bc"));
      }
      s.boundary.push_back(ec);
    }
    if (default_bc) {
      std::vector<std::vector<bool>> used(s.face_count, std::vector<bool>(sides, false));
      for (const auto& g : s.gluings) used[g.fa][g.ea] = used[g.fb][g.eb] = true;
      for (const auto& b : s.boundary) used[b.face][b.edge] = true;
      for (int f = 0; f < s.face_count; ++f)
        for (int e = 0; e < sides; ++e)
          if (!used[f][e]) s.boundary.push_back({f, e, *default_bc, *default_bc, Rat(1)});
    }
    for (const auto& p : doc.value("punctures", nlohmann::json::array())) {
      Puncture pu;
      pu.face = p.at("face").get<int>();
      check_fe(pu.face, 0);
      const auto& pos = p.at("pos");
      const std::int64_t den = pos.size() > 2 ? pos.at(2).get<std::int64_t>() : 1;
      pu.pos = {Rat(pos.at(0).get<std::int64_t>(), den), Rat(pos.at(1).get<std::int64_t>(), den)};
      pu.M = matrix_from_json(p.at("M"), s.rank);
      if (!is_unitary(pu.M)) fail(ErrorKind::NonUnitaryMatrix, "monodromy is not unitary");
      const auto& cut = p.at("cut");
      pu.cut = {Rat(cut.at(0).get<std::int64_t>()), Rat(cut.at(1).get<std::int64_t>())};
      if (pu.cut == QVec{}) fail(ErrorKind::SchemaError, "cut direction must be nonzero");
      s.punctures.push_back(pu);
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::SchemaError, std::string("surface document: ") + ex.what());
  }
  return s;
}

inline nlohmann::json surface_to_json(const SurfaceSpec& s) {
  nlohmann::json j;
  j["face_kind"] = s.face_kind == CellKind::Quadrangulation ? "square" : "triangle";
  j["faces"] = s.face_count;
  j["rank"] = s.rank;
  j["gluings"] = nlohmann::json::array();
  for (const auto& g : s.gluings)
    j["gluings"].push_back({{"a", {g.fa, g.ea}}, {"b", {g.fb, g.eb}}, {"flip", g.flip}, {"U", matrix_to_json(g.U)}});
  j["boundary"] = nlohmann::json::array();
  for (const auto& b : s.boundary) {
    nlohmann::json e{{"face", b.face}, {"edge", b.edge}};
    if (b.split == Rat(1)) e["bc"] = std::string(1, bc_char(b.before));
    else
      e["split"] = {{"frac", {b.split.numerator(), b.split.denominator()}},
                    {"before", std::string(1, bc_char(b.before))},
                    {"after", std::string(1, bc_char(b.after))}};
    j["boundary"].push_back(e);
  }
  j["punctures"] = nlohmann::json::array();
  for (const auto& p : s.punctures) {
    const std::int64_t den = std::lcm(p.pos.a.denominator(), p.pos.b.denominator());
    j["punctures"].push_back({{"face", p.face},
                              {"pos", {(p.pos.a * den).numerator(), (p.pos.b * den).numerator(), den}},
                              {"M", matrix_to_json(p.M)},
                              {"cut", {p.cut.a.numerator(), p.cut.b.numerator()}}});
  }
  return j;
}

// ---------------------------------------------------------------------------
// Combinatorics of the face complex (independent of the mesh)

struct SideInfo {
  bool glued = false;
  int pf = -1, pe = -1;  // partner face/edge
  bool flip = false;
  Mat U;        // transport into the partner face
  Affine map;   // unit-face chart of this face -> chart of the partner face
  EdgeCondition bc;  // when not glued
};

struct CutEnd {
  enum Kind { Boundary, GluedEdge, Corner } kind = Boundary;
  int face = 0, edge = 0, corner = 0;
  QVec point;
};

struct CornerClass {
  std::vector<std::pair<int, int>> wedges;  // (face, corner) in angular order
  std::vector<int> crossings;               // edges crossed between consecutive wedges
  bool boundary = false;
  double angle = 0.0;
  BC bc_first = BC::Neumann, bc_last = BC::Neumann;  // bcs of the end edges (boundary corners)
  std::pair<int, int> edge_first{-1, -1}, edge_last{-1, -1};
  double holonomy_defect = 0.0;
};

enum class SingularityKind { Cone, Corner, Puncture };

struct Singularity {
  SingularityKind kind = SingularityKind::Cone;
  int wedges = 0;        // angle = wedges * face angle (corners inside an edge use 0 and angle pi)
  double angle = 0.0;
  BC b = BC::Neumann, b_hat = BC::Neumann;
  Mat M;
  int face = 0;          // chart carrying the location
  QVec point;            // unit-face coordinates in that chart
  int corner_class = -1;
  int puncture = -1;
  int anchor = -1;       // nearest active vertex (filled by discretize)
  bool vertex_at_tip = false;
};

struct FaceComplex {
  CellKind kind = CellKind::Quadrangulation;
  int faces = 0;
  int sides = 4;
  int rank = 1;
  std::vector<std::vector<SideInfo>> side;
  std::vector<std::vector<int>> corner_of;  // (face, corner) -> class
  std::vector<CornerClass> corners;
  std::vector<CutEnd> cut_ends;
  std::vector<Singularity> singularities;

  const std::vector<QVec>& unit() const { return unit_corners(kind); }
  QVec corner(int c) const { return unit()[((c % sides) + sides) % sides]; }
  QVec edge_dir(int e) const { return corner(e + 1) - corner(e); }
};

namespace detail {

inline Affine side_map(CellKind k, int sides, int e, int e2, bool flip) {
  const auto& C = unit_corners(k);
  const QVec de = C[(e + 1) % sides] - C[e];
  const QVec de2 = C[(e2 + 1) % sides] - C[e2];
  IMat R = rotation_generator(k);
  IMat base = flip ? reflection_generator(k) : IMat{};
  IMat L = base;
  const QVec target = flip ? de2 : -de2;
  for (int r = 0; r < rotation_order(k); ++r) {
    if (L(de) == target) {
      const QVec anchor = flip ? C[e2] : C[(e2 + 1) % sides];
      return {L, anchor - L(C[e])};
    }
    L = R * L;
  }
  fail(ErrorKind::SchemaError, "edges cannot be matched by a lattice isometry");
}

// Parameter in [0,1] of point q on segment [A,B], or nullopt if off it.
inline std::optional<Rat> param_on_segment(const QVec& q, const QVec& A, const QVec& B) {
  const QVec u = B - A, r = q - A;
  if (cross(u, r) != 0) return std::nullopt;
  const Rat t = u.a != 0 ? r.a / u.a : r.b / u.b;
  if (t < 0 || t > 1) return std::nullopt;
  return t;
}

// First exit of the ray p + t*v (t >= 0) from the closed face of size n.
// Returns (t, list of edges attaining it).
inline std::pair<Rat, std::vector<int>> ray_exit(CellKind k, const QVec& p, const QVec& v, const Rat& n) {
  const auto& C = unit_corners(k);
  const int sides = side_count(k);
  std::optional<Rat> best;
  std::vector<int> who;
  for (int j = 0; j < sides; ++j) {
    const QVec A = n * C[j];
    const QVec E = n * (C[(j + 1) % sides] - C[j]);
    const Rat cv = cross(E, v);
    if (cv >= 0) continue;
    const Rat t = -cross(E, p - A) / cv;
    if (!best || t < *best) {
      best = t;
      who = {j};
    } else if (t == *best) {
      who.push_back(j);
    }
  }
  if (!best) fail(ErrorKind::SchemaError, "ray does not leave the face");
  return {*best, who};
}

inline BC bc_at(const EdgeCondition& ec, const Rat& s) { return s < ec.split ? ec.before : ec.after; }

}  // namespace detail

inline FaceComplex build_face_complex(const SurfaceSpec& spec) {
  FaceComplex fc;
  fc.kind = spec.face_kind;
  fc.faces = spec.face_count;
  fc.sides = side_count(spec.face_kind);
  fc.rank = spec.rank;
  fc.side.assign(fc.faces, std::vector<SideInfo>(fc.sides));
  const int S = fc.sides;

  std::vector<std::vector<int>> used(fc.faces, std::vector<int>(S, 0));
  for (const auto& g : spec.gluings) {
    if (g.U.rows() != spec.rank) fail(ErrorKind::SchemaError, "gluing matrix rank mismatch");
    if (g.fa == g.fb && g.ea == g.eb) fail(ErrorKind::SchemaError, "edge glued to itself");
    if (used[g.fa][g.ea]++ || used[g.fb][g.eb]++) fail(ErrorKind::SchemaError, "edge glued more than once");
    auto& A = fc.side[g.fa][g.ea];
    auto& B = fc.side[g.fb][g.eb];
    A.glued = B.glued = true;
    A.pf = g.fb; A.pe = g.eb; A.flip = g.flip; A.U = g.U;
    B.pf = g.fa; B.pe = g.ea; B.flip = g.flip; B.U = g.U.adjoint();
    A.map = detail::side_map(fc.kind, S, g.ea, g.eb, g.flip);
    B.map = detail::side_map(fc.kind, S, g.eb, g.ea, g.flip);
  }
  for (const auto& b : spec.boundary) {
    if (used[b.face][b.edge]) fail(ErrorKind::SchemaError, "edge is both glued and given a boundary condition");
    used[b.face][b.edge] = 1;
    fc.side[b.face][b.edge].bc = b;
  }
  for (int f = 0; f < fc.faces; ++f)
    for (int e = 0; e < S; ++e)
      if (!used[f][e])
        fail(ErrorKind::SchemaError, "edge [" + std::to_string(f) + "," + std::to_string(e) + "] is neither glued nor bounded");

  // Corner classes by union-find over (face, corner).
  std::vector<int> parent(fc.faces * S);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (int f = 0; f < fc.faces; ++f)
    for (int e = 0; e < S; ++e) {
      const auto& sd = fc.side[f][e];
      if (!sd.glued) continue;
      const int c0 = e, c1 = (e + 1) % S;
      const int d0 = sd.flip ? sd.pe : (sd.pe + 1) % S;
      const int d1 = sd.flip ? (sd.pe + 1) % S : sd.pe;
      unite(f * S + c0, sd.pf * S + d0);
      unite(f * S + c1, sd.pf * S + d1);
    }
  std::map<int, int> cls;
  fc.corner_of.assign(fc.faces, std::vector<int>(S, -1));
  for (int f = 0; f < fc.faces; ++f)
    for (int c = 0; c < S; ++c) {
      const int r = find(f * S + c);
      auto it = cls.find(r);
      if (it == cls.end()) it = cls.emplace(r, static_cast<int>(cls.size())).first;
      fc.corner_of[f][c] = it->second;
    }
  fc.corners.resize(cls.size());

  // Cut endpoints at the macroscopic level.
  for (std::size_t i = 0; i < spec.punctures.size(); ++i) {
    const auto& p = spec.punctures[i];
    if (p.M.rows() != spec.rank) fail(ErrorKind::SchemaError, "monodromy rank mismatch");
    if (!in_open_face(fc.kind, p.pos, Rat(1))) fail(ErrorKind::SchemaError, "puncture must lie in the open face");
    for (std::size_t j = 0; j < i; ++j)
      if (spec.punctures[j].face == p.face && spec.punctures[j].pos == p.pos)
        fail(ErrorKind::SchemaError, "punctures must be distinct");
    auto [t, who] = detail::ray_exit(fc.kind, p.pos, p.cut, Rat(1));
    CutEnd ce;
    ce.face = p.face;
    ce.point = p.pos + t * p.cut;
    if (who.size() == 2) {
      ce.kind = CutEnd::Corner;
      const int a = who[0], b = who[1];
      ce.corner = ((a + 1) % S == b) ? b : a;
    } else {
      ce.edge = who[0];
      ce.kind = fc.side[p.face][ce.edge].glued ? CutEnd::GluedEdge : CutEnd::Boundary;
    }
    fc.cut_ends.push_back(ce);
  }

  // Walk the link of each corner class.
  auto cut_factor_in_wedge = [&](int f, int c, int e_in, int e_out, int cls_id) {
    Mat F = identity(spec.rank);
    for (std::size_t i = 0; i < spec.punctures.size(); ++i) {
      const auto& ce = fc.cut_ends[i];
      if (ce.kind != CutEnd::Corner || ce.face != f || ce.corner != c) continue;
      (void)cls_id;
      const QVec P = fc.corner(c);
      const QVec u_in = (e_in == c ? fc.corner(c + 1) : fc.corner(c - 1)) - P;
      const QVec u_out = (e_out == c ? fc.corner(c + 1) : fc.corner(c - 1)) - P;
      const QVec d = spec.punctures[i].cut;
      F = (cross(d, u_out - u_in) > 0 ? spec.punctures[i].M : Mat(spec.punctures[i].M.adjoint())) * F;
    }
    return F;
  };

  for (int id = 0; id < static_cast<int>(fc.corners.size()); ++id) {
    auto& cc = fc.corners[id];
    int f0 = -1, c0 = -1;
    for (int f = 0; f < fc.faces && f0 < 0; ++f)
      for (int c = 0; c < S; ++c)
        if (fc.corner_of[f][c] == id) { f0 = f; c0 = c; break; }
    // Walk in one direction; each step leaves through e_out.
    auto walk = [&](int f, int c, int e_out, std::vector<std::pair<int, int>>& seq, std::vector<int>& cross_edges,
                    Mat& hol, bool& closed, std::pair<int, int>& end_edge) {
      const int fs = f, cs = c, es = e_out;
      int e_in = (e_out == c) ? (c + S - 1) % S : c;
      closed = false;
      int guard = 0;
      while (true) {
        seq.push_back({f, c});
        hol = cut_factor_in_wedge(f, c, e_in, e_out, id) * hol;
        const auto& sd = fc.side[f][e_out];
        if (!sd.glued) { end_edge = {f, e_out}; return; }
        cross_edges.push_back(f * S + e_out);
        hol = sd.U * hol;
        const int nf = sd.pf, ne = sd.pe;
        const int nc = (e_out == c) ? (sd.flip ? ne : (ne + 1) % S) : (sd.flip ? (ne + 1) % S : ne);
        const int n_out = (ne == nc) ? (nc + S - 1) % S : nc;
        f = nf; c = nc; e_in = ne; e_out = n_out;
        if (f == fs && c == cs && e_out == es) { closed = true; return; }
        if (++guard > 4 * fc.faces * S + 8) fail(ErrorKind::SchemaError, "corner link walk did not terminate");
      }
    };
    std::vector<std::pair<int, int>> seq;
    std::vector<int> xe;
    Mat hol = identity(spec.rank);
    bool closed = false;
    std::pair<int, int> end1{-1, -1};
    walk(f0, c0, c0, seq, xe, hol, closed, end1);
    if (closed) {
      cc.boundary = false;
      cc.wedges = seq;
      cc.crossings = xe;
      cc.holonomy_defect = spectral_norm(hol - identity(spec.rank));
    } else {
      // Walk the other way from the start and splice.
      std::vector<std::pair<int, int>> back;
      std::vector<int> xb;
      Mat hb = identity(spec.rank);
      bool cl2 = false;
      std::pair<int, int> end2{-1, -1};
      walk(f0, c0, (c0 + S - 1) % S, back, xb, hb, cl2, end2);
      std::reverse(back.begin(), back.end());
      cc.wedges = back;
      cc.wedges.insert(cc.wedges.end(), seq.begin() + 1, seq.end());
      cc.boundary = true;
      cc.edge_first = end2;
      cc.edge_last = end1;
    }
    cc.angle = static_cast<double>(cc.wedges.size()) * face_angle(fc.kind);
    if (cc.boundary) {
      // The corner sits at the start of edge e exactly when e == c.
      auto bc_near = [&](std::pair<int, int> fe, int c) {
        const auto& ec = fc.side[fe.first][fe.second].bc;
        return fe.second == c ? ec.before : ec.after;
      };
      cc.bc_first = bc_near(cc.edge_first, cc.wedges.front().second);
      cc.bc_last = bc_near(cc.edge_last, cc.wedges.back().second);
    }
  }

  // Singularity registry.
  const double pi = std::numbers::pi;
  for (int id = 0; id < static_cast<int>(fc.corners.size()); ++id) {
    const auto& cc = fc.corners[id];
    const int k = static_cast<int>(cc.wedges.size());
    Singularity s;
    s.wedges = k;
    s.angle = cc.angle;
    s.corner_class = id;
    s.face = cc.wedges.front().first;
    s.point = fc.corner(cc.wedges.front().second);
    if (!cc.boundary) {
      if (std::abs(cc.angle - 2 * pi) < 1e-12) continue;
      s.kind = SingularityKind::Cone;
    } else {
      if (std::abs(cc.angle - pi) < 1e-12 && cc.bc_first == cc.bc_last) continue;
      s.kind = SingularityKind::Corner;
      s.b = cc.bc_last;  // clockwise end
      s.b_hat = cc.bc_first;
    }
    fc.singularities.push_back(s);
  }
  for (int f = 0; f < fc.faces; ++f)
    for (int e = 0; e < S; ++e) {
      const auto& sd = fc.side[f][e];
      if (sd.glued || sd.bc.split == Rat(1) || sd.bc.before == sd.bc.after) continue;
      Singularity s;
      s.kind = SingularityKind::Corner;
      s.wedges = 0;
      s.angle = pi;
      s.b = sd.bc.before;
      s.b_hat = sd.bc.after;
      s.face = f;
      s.point = fc.corner(e) + sd.bc.split * fc.edge_dir(e);
      fc.singularities.push_back(s);
    }
  for (std::size_t i = 0; i < spec.punctures.size(); ++i) {
    Singularity s;
    s.kind = SingularityKind::Puncture;
    s.angle = 2 * pi;
    s.M = spec.punctures[i].M;
    s.face = spec.punctures[i].face;
    s.point = spec.punctures[i].pos;
    s.puncture = static_cast<int>(i);
    fc.singularities.push_back(s);
  }
  return fc;
}

inline ValidationReport validate_flatness(const SurfaceSpec& spec) {
  ValidationReport rep;
  FaceComplex fc;
  try {
    fc = build_face_complex(spec);
  } catch (const Error& e) {
    rep.issues.push_back(e.what());
    return rep;
  }
  const double th = face_angle(fc.kind);
  for (std::size_t id = 0; id < fc.corners.size(); ++id) {
    const auto& cc = fc.corners[id];
    if (!cc.boundary && cc.holonomy_defect > 1e-10) {
      std::ostringstream os;
      os.precision(17);
      os << "holonomy defect " << cc.holonomy_defect << " at corner class " << id << " (angle " << cc.wedges.size()
         << "*" << (fc.kind == CellKind::Quadrangulation ? "pi/2" : "pi/3") << ")";
      rep.issues.push_back(os.str());
    }
    const double ratio = cc.angle / th;
    if (std::abs(ratio - std::round(ratio)) > 1e-12) rep.issues.push_back("corner angle not in the allowed set");
  }
  for (std::size_t i = 0; i < fc.cut_ends.size(); ++i) {
    const auto& ce = fc.cut_ends[i];
    if (ce.kind != CutEnd::GluedEdge) continue;
    const double defect = spectral_norm(spec.punctures[i].M - identity(spec.rank));
    if (defect <= 1e-10) continue;
    std::ostringstream os;
    os.precision(17);
    os << "cut of puncture " << i << " ends inside glued edge [" << ce.face << "," << ce.edge
       << "]: implied singular point with holonomy defect " << defect;
    rep.issues.push_back(os.str());
  }
  return rep;
}

}  // namespace lapdet
