#pragma once
// Mesh-N discretization of a glued surface.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lapdet/errors.hpp"
#include "lapdet/geometry.hpp"
#include "lapdet/lattice.hpp"
#include "lapdet/linalg.hpp"
#include "lapdet/surface.hpp"

namespace lapdet {

enum VertexTag : unsigned {
  kInterior = 1u,
  kNeumannBoundary = 2u,
  kDirichletBoundary = 4u,
  kConeTip = 8u,
  kFaceEdge = 16u,
  kFaceCorner = 32u,
  kTruncated = 64u,
};

struct Chart {
  int face = 0;
  QVec local;  // mesh units
};

struct DVertex {
  std::vector<Chart> charts;  // charts[0] is canonical
  unsigned tags = 0;
  bool active = true;
  int index = -1;  // row index among active vertices
  int lattice_class = 0;
  Rat cell_weight{0};
  double mass = 1.0;
  int corner_class = -1;
};

// Directed half-edge; `to` is an active index, or -1 for a removed target.
struct DEdge {
  int from = 0;
  int to = -1;
  double w = 0.0;
  Mat U;          // transport from `from` to `to`
  int sign = 0;   // 0 plain, +1 Neumann reflection, -1 Dirichlet reflection
};

struct Counts {
  std::int64_t active = 0;
  Rat dirichlet_length{0};
  Rat neumann_length{0};
  Rat volume_weighted{0};
};

struct DiscreteSurface {
  SurfaceSpec spec;
  FaceComplex fc;
  LatticeSpec lattice;
  int N = 0;
  double delta = 0.0;
  int rank = 1;
  std::vector<DVertex> vertices;
  std::vector<int> active;  // active index -> vertex id
  std::vector<DEdge> edges;
  std::vector<double> w;     // per active vertex, sum of half-edge weights
  std::vector<Singularity> singularities;
  std::vector<QVec> puncture_points;  // mesh units, chart of the puncture face
  std::vector<QVec> cut_ends;         // mesh units
  Counts counts;

  int n_active() const { return static_cast<int>(active.size()); }
  const DVertex& vertex(int active_index) const { return vertices[active[active_index]]; }
};

struct DiscretizeOptions {
  // Vertices failing the predicate are removed as if Dirichlet.
  std::function<bool(int face, const QVec& local)> keep;
};

// A point of the fundamental domain that lies on no edge and no vertex.
inline QVec puncture_anchor(const LatticeSpec& lat) {
  std::vector<QVec> cand{{Rat(1, 2), Rat(1, 2)}, {Rat(1, 3), Rat(1, 3)}, {Rat(2, 3), Rat(2, 3)},
                         {Rat(0), Rat(0)},       {Rat(1, 4), Rat(1, 4)}, {Rat(1, 5), Rat(2, 5)}};
  for (const auto& c : cand) {
    bool bad = lat.class_of(c) >= 0;
    for (int i = -2; i <= 2 && !bad; ++i)
      for (int j = -2; j <= 2 && !bad; ++j)
        for (const auto& e : lat.edges) {
          const QVec A = lat.vertices[e.from] + QVec{Rat(i), Rat(j)};
          if (detail::param_on_segment(c, A, A + lat.edge_vector(e))) { bad = true; break; }
        }
    if (!bad) return c;
  }
  fail(ErrorKind::PunctureOnEdge, "no edge-free anchor point for punctures on lattice " + lat.name);
}

namespace detail {

struct Node {
  int face;
  QVec p;
  int cls;
};

class Discretizer {
 public:
  Discretizer(const SurfaceSpec& spec, const LatticeSpec& lat, int N, const DiscretizeOptions& opt)
      : spec_(spec), lat_(lat), N_(N), opt_(opt) {}

  DiscreteSurface run() {
    if (N_ < 2) fail(ErrorKind::MeshIncompatible, "N must be >= 2");
    if (lat_.cell_kind != spec_.face_kind) fail(ErrorKind::SchemaError, "lattice cell kind does not match face kind");
    ds_.spec = spec_;
    ds_.fc = build_face_complex(spec_);
    ds_.lattice = lat_;
    ds_.N = N_;
    ds_.delta = lat_.delta0() / N_;
    ds_.rank = spec_.rank;
    S_ = ds_.fc.sides;
    check_splits();
    enumerate_nodes();
    identify();
    classify();
    place_punctures();
    build_edges();
    finish();
    return std::move(ds_);
  }

 private:
  const SurfaceSpec& spec_;
  const LatticeSpec& lat_;
  int N_;
  DiscretizeOptions opt_;
  DiscreteSurface ds_;
  int S_ = 4;
  std::vector<Node> nodes_;
  std::vector<std::unordered_map<QVec, int, QVecHash>> at_;
  std::vector<int> node_vertex_;

  Rat n() const { return Rat(N_); }
  QVec C(int c) const { return n() * ds_.fc.corner(c); }

  void check_splits() {
    for (const auto& b : spec_.boundary)
      if (b.split != Rat(1) && (Rat(N_) * b.split).denominator() != 1)
        fail(ErrorKind::MeshIncompatible, "split fraction denominator does not divide N=" + std::to_string(N_));
  }

  void enumerate_nodes() {
    at_.resize(spec_.face_count);
    for (int f = 0; f < spec_.face_count; ++f)
      for (int c = 0; c < lat_.class_count(); ++c)
        for (int i = -1; i <= N_; ++i)
          for (int j = -1; j <= N_; ++j) {
            const QVec p = lat_.vertices[c] + QVec{Rat(i), Rat(j)};
            if (!in_closed_face(spec_.face_kind, p, n())) continue;
            at_[f].emplace(p, static_cast<int>(nodes_.size()));
            nodes_.push_back({f, p, c});
          }
  }

  int node_at(int f, const QVec& p) const {
    auto it = at_[f].find(p);
    if (it == at_[f].end()) {
      std::ostringstream os;
      os << "no lattice point at " << p << " in face " << f;
      fail(ErrorKind::UnreflectableEdge, os.str());
    }
    return it->second;
  }

  QVec apply_side(const SideInfo& sd, const QVec& x) const { return sd.map.L(x) + n() * sd.map.t; }

  void identify() {
    std::vector<int> parent(nodes_.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& nd = nodes_[i];
      for (int e = 0; e < S_; ++e) {
        const auto& sd = ds_.fc.side[nd.face][e];
        if (!sd.glued || !param_on_segment(nd.p, C(e), C(e + 1))) continue;
        const int j = node_at(sd.pf, apply_side(sd, nd.p));
        parent[find(static_cast<int>(i))] = find(j);
      }
    }
    node_vertex_.assign(nodes_.size(), -1);
    std::unordered_map<int, int> root_to_vertex;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const int r = find(static_cast<int>(i));
      auto it = root_to_vertex.find(r);
      if (it == root_to_vertex.end()) {
        it = root_to_vertex.emplace(r, static_cast<int>(ds_.vertices.size())).first;
        ds_.vertices.emplace_back();
      }
      node_vertex_[i] = it->second;
      ds_.vertices[it->second].charts.push_back({nodes_[i].face, nodes_[i].p});
    }
  }

  int corner_index(const QVec& p) const {
    for (int c = 0; c < S_; ++c)
      if (p == C(c)) return c;
    return -1;
  }

  std::vector<std::pair<int, Rat>> edges_containing(const QVec& p) const {
    std::vector<std::pair<int, Rat>> out;
    for (int e = 0; e < S_; ++e)
      if (auto t = param_on_segment(p, C(e), C(e + 1))) out.push_back({e, *t});
    return out;
  }

  void classify() {
    const Rat corner_w = spec_.face_kind == CellKind::Quadrangulation ? Rat(1, 4) : Rat(1, 6);
    for (auto& v : ds_.vertices) {
      bool dirichlet = false, neumann = false, on_edge = false;
      double angle = 2.0 * std::numbers::pi;
      for (const auto& ch : v.charts) {
        const int c = corner_index(ch.local);
        if (c >= 0) {
          v.cell_weight += corner_w;
          v.tags |= kFaceCorner;
          v.corner_class = ds_.fc.corner_of[ch.face][c];
          const auto& cc = ds_.fc.corners[v.corner_class];
          if (cc.boundary) {
            angle = cc.angle;
            if (cc.bc_first == BC::Dirichlet || cc.bc_last == BC::Dirichlet) dirichlet = true;
            else neumann = true;
          }
          continue;
        }
        const auto on = edges_containing(ch.local);
        if (!on.empty()) {
          v.cell_weight += Rat(1, 2);
          on_edge = true;
          const auto& sd = ds_.fc.side[ch.face][on[0].first];
          if (!sd.glued) {
            angle = std::numbers::pi;
            const Rat s = on[0].second;
            BC b = s < sd.bc.split ? sd.bc.before : (s > sd.bc.split ? sd.bc.after
                                                     : (sd.bc.before == BC::Dirichlet || sd.bc.after == BC::Dirichlet
                                                            ? BC::Dirichlet : BC::Neumann));
            (b == BC::Dirichlet ? dirichlet : neumann) = true;
          }
        } else {
          v.cell_weight += Rat(1);
        }
      }
      if (on_edge) v.tags |= kFaceEdge;
      if (v.corner_class >= 0) {
        for (const auto& s : ds_.fc.singularities)
          if (s.kind == SingularityKind::Cone && s.corner_class == v.corner_class) v.tags |= kConeTip;
      }
      v.lattice_class = lat_.class_of(v.charts[0].local);
      if (dirichlet) {
        v.tags |= kDirichletBoundary;
        v.active = false;
      } else if (neumann) {
        v.tags |= kNeumannBoundary;
        v.mass = angle / (2.0 * std::numbers::pi);
      } else {
        v.tags |= kInterior;
      }
      if (v.active && opt_.keep && !opt_.keep(v.charts[0].face, v.charts[0].local)) {
        v.active = false;
        v.tags |= kTruncated;
      }
    }
    for (std::size_t i = 0; i < ds_.vertices.size(); ++i) {
      auto& v = ds_.vertices[i];
      if (!v.active) continue;
      v.index = static_cast<int>(ds_.active.size());
      ds_.active.push_back(static_cast<int>(i));
    }
  }

  struct CutSeg {
    int face;
    QVec P, Q, d;
    Mat M;
  };
  std::vector<CutSeg> cuts_;

  void place_punctures() {
    if (spec_.punctures.empty()) return;
    const QVec u0 = puncture_anchor(lat_);
    for (std::size_t i = 0; i < spec_.punctures.size(); ++i) {
      const auto& pu = spec_.punctures[i];
      // The scaled point itself when it avoids the graph, else its cell shifted to the anchor.
      const QVec scaled = n() * pu.pos;
      QVec P = scaled;
      if (!edge_free(pu.face, P)) P = QVec{floor_rat(scaled.a), floor_rat(scaled.b)} + u0;
      if (!in_open_face(spec_.face_kind, P, n())) fail(ErrorKind::PunctureOnEdge, "puncture falls outside its face");
      if (!edge_free(pu.face, P)) fail(ErrorKind::PunctureOnEdge, "puncture on a lattice edge");
      auto [t, who] = ray_exit(spec_.face_kind, P, pu.cut, n());
      const QVec Q = P + t * pu.cut;
      const auto& ce = ds_.fc.cut_ends[i];
      const bool corner_hit = who.size() == 2;
      bool same = corner_hit == (ce.kind == CutEnd::Corner);
      if (same && !corner_hit) same = who[0] == ce.edge;
      if (same && corner_hit) same = Q == C(ce.corner);
      if (!same) fail(ErrorKind::MeshIncompatible, "cut endpoint changes type at N=" + std::to_string(N_));
      ds_.puncture_points.push_back(P);
      ds_.cut_ends.push_back(Q);
      cuts_.push_back({pu.face, P, Q, pu.cut, pu.M});
    }
  }

  bool edge_free(int face, const QVec& P) const {
    if (lat_.class_of(P) >= 0) return false;
    for (const auto& nd : nodes_) {
      if (nd.face != face) continue;
      const QVec r = nd.p - P;
      if (abs(r.a) > 3 || abs(r.b) > 3) continue;
      for (const auto* e : lat_.edges_from(nd.cls))
        if (param_on_segment(P, nd.p, nd.p + lat_.edge_vector(*e))) return false;
    }
    return true;
  }

  // Transport factor from cut crossings along the segment s1 -> s2 in face f.
  Mat cut_transport(int f, const QVec& s1, const QVec& s2) const {
    Mat F = identity(spec_.rank);
    if (s1 == s2) return F;
    for (const auto& c : cuts_) {
      if (c.face != f) continue;
      const QVec seg = s2 - s1;
      const QVec cu = c.Q - c.P;
      const Rat d1 = cross(cu, s1 - c.P), d2 = cross(cu, s2 - c.P);
      const Rat d3 = cross(seg, c.P - s1), d4 = cross(seg, c.Q - s1);
      if (param_on_segment(c.Q, s1, s2)) continue;  // touching the end of the cut only
      if (param_on_segment(c.P, s1, s2)) fail(ErrorKind::PunctureOnEdge, "edge passes through a puncture");
      const bool s1_on = param_on_segment(s1, c.P, c.Q).has_value();
      const bool s2_on = param_on_segment(s2, c.P, c.Q).has_value();
      if (s1_on || s2_on) fail(ErrorKind::PunctureOnEdge, "cut passes through a lattice point");
      if (d1 * d2 < 0 && d3 * d4 < 0) F = (cross(c.d, seg) > 0 ? c.M : Mat(c.M.adjoint())) * F;
    }
    return F;
  }

  void emit(int from_vertex, int to_vertex, double w, const Mat& U, int sign) {
    DEdge e;
    e.from = from_vertex;
    e.to = to_vertex;
    e.w = w;
    e.U = U;
    e.sign = sign;
    ds_.edges.push_back(e);
  }

  BC bc_on_edge(const SideInfo& sd, const Rat& s) const {
    if (s < sd.bc.split) return sd.bc.before;
    if (s > sd.bc.split) return sd.bc.after;
    return (sd.bc.before == BC::Dirichlet || sd.bc.after == BC::Dirichlet) ? BC::Dirichlet : BC::Neumann;
  }

  // Edge from x (chart f, point p) toward y = p + v.
  void resolve(int xv, int f, const QVec& p, const QVec& v, double w) {
    const QVec y = p + v;
    if (in_closed_face(spec_.face_kind, y, n())) {
      emit(xv, node_vertex_[node_at(f, y)], w, cut_transport(f, p, y), 0);
      return;
    }
    auto [t, who] = ray_exit(spec_.face_kind, p, v, n());
    if (who.size() != 1) fail(ErrorKind::UnreflectableEdge, "edge passes through a face corner");
    const QVec q = p + t * v;
    const int e = who[0];
    const auto& sd = ds_.fc.side[f][e];
    if (sd.glued) {
      const QVec y2 = apply_side(sd, y);
      if (!in_closed_face(spec_.face_kind, y2, n())) fail(ErrorKind::UnreflectableEdge, "edge crosses more than one face edge");
      const QVec q2 = apply_side(sd, q);
      const Mat U = cut_transport(sd.pf, q2, y2) * sd.U * cut_transport(f, p, q);
      emit(xv, node_vertex_[node_at(sd.pf, y2)], w, U, 0);
      return;
    }
    const Rat s = *param_on_segment(q, C(e), C(e + 1));
    const int sign = bc_sign(bc_on_edge(sd, s));
    const QVec ys = reflect_across(spec_.face_kind, y, C(e), C(e + 1) - C(e));
    if (ys == p) {
      emit(xv, xv, w, identity(spec_.rank), sign);
      return;
    }
    if (!in_closed_face(spec_.face_kind, ys, n())) fail(ErrorKind::UnreflectableEdge, "reflected endpoint leaves the face");
    const Mat U = cut_transport(f, q, ys) * cut_transport(f, p, q);
    emit(xv, node_vertex_[node_at(f, ys)], w, U, sign);
  }

  static double arg_of(CellKind k, const QVec& v) {
    const auto z = embed(k, v);
    return std::atan2(z.imag(), z.real());
  }

  static double ccw_angle(CellKind k, const QVec& from, const QVec& to) {
    double a = arg_of(k, to) - arg_of(k, from);
    while (a <= 0) a += 2.0 * std::numbers::pi;
    while (a > 2.0 * std::numbers::pi) a -= 2.0 * std::numbers::pi;
    return a;
  }

  int key(int f, int e) const { return f * S_ + e; }

  void corner_edges(int xv, const DVertex& vx) {
    const auto& cc = ds_.fc.corners[vx.corner_class];
    const double half_ext = 0.5 * (2.0 * std::numbers::pi - cc.angle);
    const int key_first = cc.boundary ? key(cc.edge_first.first, cc.edge_first.second) : -1;
    const int key_last = cc.boundary ? key(cc.edge_last.first, cc.edge_last.second) : -1;
    const CellKind k = spec_.face_kind;
    for (const auto& ch : vx.charts) {
      const int f = ch.face;
      const int c = corner_index(ch.local);
      const QVec& p = ch.local;
      const QVec Eout = C(c + 1) - p;
      const QVec Einr = C(c - 1) - p;
      const int e_out = c, e_in = (c + S_ - 1) % S_;
      const auto& s_out = ds_.fc.side[f][e_out];
      const auto& s_in = ds_.fc.side[f][e_in];
      auto owns = [&](int e, const SideInfo& sd) { return !sd.glued || key(f, e) < key(sd.pf, sd.pe); };
      const int cls = lat_.class_of(p);
      for (const auto* le : lat_.edges_from(cls)) {
        const QVec v = lat_.edge_vector(*le);
        const Rat co = cross(Eout, v), ci = cross(v, Einr);
        if (co > 0 && ci > 0) {
          resolve(xv, f, p, v, le->weight);
        } else if (co == 0 && dot(k, Eout, v) > 0) {
          if (owns(e_out, s_out)) resolve(xv, f, p, v, le->weight);
        } else if (ci == 0 && dot(k, Einr, v) > 0) {
          if (owns(e_in, s_in)) resolve(xv, f, p, v, le->weight);
        } else if (cc.boundary) {
          const int other_key_out = key(f, e_out) == key_first ? key_last : key_first;
          const int other_key_in = key(f, e_in) == key_first ? key_last : key_first;
          const double tol = 1e-12;
          bool done = false;
          if (!s_out.glued) {
            const double beta = ccw_angle(k, v, Eout);  // clockwise from Eout to v
            if (beta < half_ext - tol || (std::abs(beta - half_ext) <= tol && key(f, e_out) < other_key_out)) {
              reflect_from_corner(xv, f, p, v, e_out, le->weight);
              done = true;
            }
          }
          if (!done && !s_in.glued) {
            const double beta = ccw_angle(k, Einr, v);
            if (beta < half_ext - tol || (std::abs(beta - half_ext) <= tol && key(f, e_in) < other_key_in))
              reflect_from_corner(xv, f, p, v, e_in, le->weight);
          }
        }
      }
    }
  }

  void reflect_from_corner(int xv, int f, const QVec& p, const QVec& v, int e, double w) {
    const auto& sd = ds_.fc.side[f][e];
    const Rat s = e == corner_index(p) ? Rat(0) : Rat(1);
    const int sign = bc_sign(bc_on_edge(sd, s));
    const QVec ys = reflect_across(spec_.face_kind, p + v, C(e), C(e + 1) - C(e));
    if (!in_closed_face(spec_.face_kind, ys, n())) fail(ErrorKind::UnreflectableEdge, "corner reflection leaves the face");
    emit(xv, node_vertex_[node_at(f, ys)], w, cut_transport(f, p, ys), sign);
  }

  void build_edges() {
    for (std::size_t vi = 0; vi < ds_.vertices.size(); ++vi) {
      const auto& vx = ds_.vertices[vi];
      if (!vx.active) continue;
      if (vx.corner_class >= 0) {
        corner_edges(static_cast<int>(vi), vx);
        continue;
      }
      const auto& ch = vx.charts[0];
      for (const auto* le : lat_.edges_from(lat_.class_of(ch.local)))
        resolve(static_cast<int>(vi), ch.face, ch.local, lat_.edge_vector(*le), le->weight);
    }
    // Re-index endpoints to active rows.
    for (auto& e : ds_.edges) {
      e.from = ds_.vertices[e.from].index;
      e.to = ds_.vertices[e.to].active ? ds_.vertices[e.to].index : -1;
    }
  }

  void finish() {
    ds_.w.assign(ds_.active.size(), 0.0);
    for (const auto& e : ds_.edges) ds_.w[e.from] += e.w;
    auto& cnt = ds_.counts;
    cnt.active = static_cast<std::int64_t>(ds_.active.size());
    for (int id : ds_.active) cnt.volume_weighted += ds_.vertices[id].cell_weight;
    for (int f = 0; f < spec_.face_count; ++f)
      for (int e = 0; e < S_; ++e) {
        const auto& sd = ds_.fc.side[f][e];
        if (sd.glued) continue;
        const Rat l1 = n() * sd.bc.split, l2 = n() * (Rat(1) - sd.bc.split);
        (sd.bc.before == BC::Dirichlet ? cnt.dirichlet_length : cnt.neumann_length) += l1;
        (sd.bc.after == BC::Dirichlet ? cnt.dirichlet_length : cnt.neumann_length) += l2;
      }
    ds_.singularities = ds_.fc.singularities;
    for (auto& s : ds_.singularities) {
      QVec P = n() * s.point;
      if (s.kind == SingularityKind::Puncture) P = ds_.puncture_points[s.puncture];
      s.vertex_at_tip = s.kind != SingularityKind::Puncture && at_[s.face].count(P) > 0;
      Rat best(-1);
      for (int a = 0; a < ds_.n_active(); ++a)
        for (const auto& ch : ds_.vertex(a).charts) {
          if (ch.face != s.face) continue;
          const Rat d2 = norm2(spec_.face_kind, ch.local - P);
          if (best < 0 || d2 < best) {
            best = d2;
            s.anchor = a;
          }
        }
    }
  }
};

}  // namespace detail

inline DiscreteSurface discretize(const SurfaceSpec& spec, const LatticeSpec& lat, int N,
                                  const DiscretizeOptions& opt = {}) {
  if (!is_normalized(lat)) fail(ErrorKind::SchemaError, "lattice weights must be normalized before discretization");
  return detail::Discretizer(spec, lat, N, opt).run();
}

inline Counts counts(const DiscreteSurface& ds) { return ds.counts; }

inline std::string tag_string(unsigned t) {
  std::string s;
  auto add = [&](unsigned bit, const char* name) {
    if (t & bit) s += (s.empty() ? "" : "|") + std::string(name);
  };
  add(kInterior, "interior");
  add(kNeumannBoundary, "neumann_boundary");
  add(kDirichletBoundary, "dirichlet_boundary");
  add(kConeTip, "cone_tip");
  add(kFaceEdge, "face_edge");
  add(kFaceCorner, "face_corner");
  add(kTruncated, "truncated");
  return s;
}

inline std::string rat_string(const Rat& r) {
  return r.denominator() == 1 ? std::to_string(r.numerator())
                              : std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline nlohmann::json singularity_json(const Singularity& s) {
  nlohmann::json j;
  j["kind"] = s.kind == SingularityKind::Cone ? "cone" : (s.kind == SingularityKind::Corner ? "corner" : "puncture");
  j["angle_over_pi"] = s.angle / std::numbers::pi;
  if (s.kind == SingularityKind::Corner) j["bc"] = std::string{bc_char(s.b), bc_char(s.b_hat)};
  if (s.kind == SingularityKind::Puncture) j["M"] = matrix_to_json(s.M);
  j["face"] = s.face;
  j["point"] = {rat_string(s.point.a), rat_string(s.point.b)};
  j["anchor"] = s.anchor;
  j["vertex_at_tip"] = s.vertex_at_tip;
  return j;
}

inline nlohmann::json discrete_header_json(const DiscreteSurface& ds) {
  nlohmann::json j;
  j["N"] = ds.N;
  j["delta"] = ds.delta;
  j["rank"] = ds.rank;
  j["lattice"] = ds.lattice.name;
  j["counts"] = {{"active", ds.counts.active},
                 {"dirichlet_length", rat_string(ds.counts.dirichlet_length)},
                 {"neumann_length", rat_string(ds.counts.neumann_length)},
                 {"volume_weighted", rat_string(ds.counts.volume_weighted)}};
  j["singularities"] = nlohmann::json::array();
  for (const auto& s : ds.singularities) j["singularities"].push_back(singularity_json(s));
  return j;
}

// Adjacency CSV: from,to,weight,sign,U entries (re,im row-major).
inline void write_adjacency_csv(const DiscreteSurface& ds, std::ostream& os) {
  os.precision(17);
  os << "from,to,weight,sign";
  for (int r = 0; r < ds.rank; ++r)
    for (int c = 0; c < ds.rank; ++c) os << ",U" << r << c << "_re,U" << r << c << "_im";
  os << "\n";
  for (const auto& e : ds.edges) {
    os << e.from << ',' << e.to << ',' << e.w << ',' << e.sign;
    for (int r = 0; r < ds.rank; ++r)
      for (int c = 0; c < ds.rank; ++c) os << ',' << e.U(r, c).real() << ',' << e.U(r, c).imag();
    os << "\n";
  }
}

// Weisfeiler-Lehman colour multiset; equal for relabelled copies.
inline std::vector<std::uint64_t> canonical_signature(const DiscreteSurface& ds, int rounds = 4) {
  const int n = ds.n_active();
  std::vector<std::uint64_t> col(n);
  auto q = [](double x) { return static_cast<std::uint64_t>(std::llround(x * 1e9)); };
  for (int i = 0; i < n; ++i) col[i] = q(ds.w[i]) * 1315423911u + ds.vertex(i).tags;
  std::vector<std::vector<std::uint64_t>> nb(n);
  for (int r = 0; r < rounds; ++r) {
    for (auto& v : nb) v.clear();
    for (const auto& e : ds.edges)
      nb[e.from].push_back((e.to >= 0 ? col[e.to] : 7u) * 2654435761u ^ q(e.w) ^ static_cast<std::uint64_t>(e.sign + 3));
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::sort(nb[i].begin(), nb[i].end());
      std::uint64_t h = col[i];
      for (auto x : nb[i]) h = h * 1099511628211u ^ x;
      next[i] = h;
    }
    col.swap(next);
  }
  std::sort(col.begin(), col.end());
  return col;
}

}  // namespace lapdet
