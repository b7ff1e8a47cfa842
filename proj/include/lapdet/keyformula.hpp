#pragma once
// Six-term decomposition of -log det* at a fixed mesh.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lapdet/constants.hpp"
#include "lapdet/discrete_surface.hpp"
#include "lapdet/errors.hpp"
#include "lapdet/models.hpp"
#include "lapdet/plane.hpp"
#include "lapdet/special.hpp"
#include "lapdet/spectral.hpp"

namespace lapdet {

struct KeyFormulaParams {
  double r = 0.2;           // macroscopic assignment radius
  double R = 6.0;           // model truncation radius, covers t <= 1 macroscopic
  int lanczos_steps = 160;  // Gauss nodes per basepoint on model surfaces
  double gamma = kEulerGamma;
  double rounding = 1e-12;  // relative budget per accumulated term

  double r_alpha(double alpha) const { return alpha < kPi ? r / std::sin(alpha / 2.0) : r; }
};

enum class Region { Plane, Corner, Cone, Puncture, Boundary };

struct Assignment {
  ModelKind kind;
  Region region = Region::Plane;
  int singularity = -1;  // index into ds.singularities
  int face = -1, edge = -1;  // boundary edge for half-planes
  double distance = 0.0;
};

namespace detail {

inline double seg_distance(CellKind k, const QVec& u, const QVec& A, const QVec& B) {
  const std::complex<double> p = embed(k, u), a = embed(k, A), b = embed(k, B);
  const std::complex<double> ab = b - a;
  double s = std::real(std::conj(ab) * (p - a)) / std::norm(ab);
  s = std::clamp(s, 0.0, 1.0);
  return std::abs(p - (a + s * ab));
}

struct Feature {
  Region region;
  int index;  // singularity index, or face * sides + edge
  double dist;
  double reach;  // assignment radius for this feature
};

// Features near a point given by its charts (face, unit coordinates): within
// their assignment radius, or within `plain` when it is positive.
inline std::vector<Feature> features_near(const DiscreteSurface& ds, const std::vector<std::pair<int, QVec>>& charts,
                                          const KeyFormulaParams& p, double plain = 0.0) {
  const FaceComplex& fc = ds.fc;
  const CellKind k = fc.kind;
  std::map<std::pair<int, int>, Feature> best;
  auto offer = [&](Region r, int idx, double dist, double reach) {
    if (dist > (plain > 0.0 ? plain : reach)) return;
    auto key = std::make_pair(static_cast<int>(r == Region::Boundary), idx);
    auto it = best.find(key);
    if (it == best.end() || dist < it->second.dist) best[key] = {r, idx, dist, reach};
  };
  for (const auto& [f, u] : charts) {
    for (int i = 0; i < static_cast<int>(ds.singularities.size()); ++i) {
      const Singularity& s = ds.singularities[i];
      if (s.kind == SingularityKind::Puncture) {
        if (ds.spec.punctures[s.puncture].face != f) continue;
        const QVec P = Rat(1, ds.N) * ds.puncture_points[s.puncture];
        offer(Region::Puncture, i, std::abs(embed(k, u - P)), p.r);
      } else if (s.wedges == 0) {
        if (s.face == f) offer(Region::Corner, i, std::abs(embed(k, u - s.point)), p.r_alpha(s.angle));
      } else {
        for (const auto& [wf, wc] : fc.corners[s.corner_class].wedges)
          if (wf == f)
            offer(s.kind == SingularityKind::Cone ? Region::Cone : Region::Corner, i,
                  std::abs(embed(k, u - fc.corner(wc))),
                  s.kind == SingularityKind::Cone ? p.r : p.r_alpha(s.angle));
      }
    }
    for (int e = 0; e < fc.sides; ++e)
      if (!fc.side[f][e].glued)
        offer(Region::Boundary, f * fc.sides + e, seg_distance(k, u, fc.corner(e), fc.corner(e + 1)), p.r);
  }
  std::vector<Feature> out;
  for (const auto& [key, v] : best) out.push_back(v);
  return out;
}

inline std::vector<std::pair<int, QVec>> unit_charts(const DiscreteSurface& ds, int x) {
  std::vector<std::pair<int, QVec>> c;
  for (const auto& ch : ds.vertex(x).charts) c.push_back({ch.face, Rat(1, ds.N) * ch.local});
  return c;
}

inline BC boundary_bc_at(const DiscreteSurface& ds, int face, int edge, const QVec& u) {
  const FaceComplex& fc = ds.fc;
  const std::complex<double> a = embed(fc.kind, fc.corner(edge)), b = embed(fc.kind, fc.corner(edge + 1));
  const double s = std::real(std::conj(b - a) * (embed(fc.kind, u) - a)) / std::norm(b - a);
  const auto& ec = fc.side[face][edge].bc;
  return s < to_double(ec.split) ? ec.before : ec.after;
}

}  // namespace detail

// Model region of a point with the given charts (face, unit coordinates).
inline Assignment assign_position(const DiscreteSurface& ds, const std::vector<std::pair<int, QVec>>& charts,
                                  const KeyFormulaParams& p) {
  const auto near2 = detail::features_near(ds, charts, p, 2.0 * p.r);
  int points = 0, interior = 0, edges = 0;
  for (const auto& f : near2) {
    points += f.region != Region::Boundary;
    interior += f.region == Region::Cone || f.region == Region::Puncture;
    edges += f.region == Region::Boundary;
  }
  if (points > 1 || (interior > 0 && edges > 0))
    fail(ErrorKind::OverlapViolation, "2r-neighbourhoods of singularities or boundary overlap at r = " + std::to_string(p.r));
  if (edges > 1 && points == 0) {
    // Two boundary edges without a corner between them must meet straight.
    for (const auto& a : near2)
      for (const auto& b : near2)
        if (a.region == Region::Boundary && b.region == Region::Boundary && a.index / ds.fc.sides == b.index / ds.fc.sides &&
            (a.index - b.index + ds.fc.sides) % ds.fc.sides == ds.fc.sides / 2 && ds.fc.sides == 4)
          fail(ErrorKind::OverlapViolation, "opposite boundary edges within 2r");
  }
  const auto near = detail::features_near(ds, charts, p);
  Assignment out;
  auto pick = [&](auto pred) -> const detail::Feature* {
    const detail::Feature* b = nullptr;
    for (const auto& f : near)
      if (pred(f) && (!b || f.dist < b->dist)) b = &f;
    return b;
  };
  if (const auto* f = pick([](const detail::Feature& f) { return f.region == Region::Corner; })) {
    const Singularity& s = ds.singularities[f->index];
    out.region = Region::Corner;
    out.singularity = f->index;
    out.distance = f->dist;
    // b at arg 0 is the clockwise end of the corner.
    if (s.wedges == 0)
      out.kind = ModelKind::wedge(kPi, s.b_hat, s.b);
    else
      out.kind = ModelKind::wedge(s.angle, s.b, s.b_hat);
    return out;
  }
  if (const auto* f = pick([](const detail::Feature& f) { return f.region != Region::Corner; })) {
    out.region = f->region;
    out.distance = f->dist;
    if (f->region == Region::Boundary) {
      out.face = f->index / ds.fc.sides;
      out.edge = f->index % ds.fc.sides;
      QVec u;
      for (const auto& [face, v] : charts)
        if (face == out.face) u = v;
      out.kind = ModelKind::half_plane(detail::boundary_bc_at(ds, out.face, out.edge, u));
    } else {
      const Singularity& s = ds.singularities[f->index];
      out.singularity = f->index;
      out.kind = f->region == Region::Cone ? ModelKind::cone(s.angle) : ModelKind::punctured(s.M);
    }
    return out;
  }
  return out;
}

inline Assignment assign_model(const DiscreteSurface& ds, int x, const KeyFormulaParams& p) {
  return assign_position(ds, detail::unit_charts(ds, x), p);
}

struct KeyFormulaReport {
  double T[6] = {0, 0, 0, 0, 0, 0};
  double budget_T[6] = {0, 0, 0, 0, 0, 0};
  double lhs = 0.0;
  double residual = 0.0;
  double budget = 0.0;
  double t5_from_A = 0.0;  // -d A |V| through the constants module
  std::map<std::string, int> assignments;

  double sum() const { return T[0] + T[1] + T[2] + T[3] + T[4] + T[5]; }

  nlohmann::json to_json() const {
    nlohmann::json terms, budgets;
    for (int i = 0; i < 6; ++i) {
      terms["T" + std::to_string(i + 1)] = T[i];
      budgets["T" + std::to_string(i + 1)] = budget_T[i];
    }
    return {{"terms", terms}, {"term_budgets", budgets}, {"lhs", lhs}, {"residual", residual},
            {"budget", budget}, {"t5_from_A", t5_from_A}, {"assignments", assignments}};
  }
};

namespace detail {

// Truncated models shared by all vertices assigned to the same feature.
class ModelCache {
 public:
  ModelCache(const DiscreteSurface& ds, const KeyFormulaParams& p) : ds_(ds), p_(p) {}

  // Active index in the model of surface vertex x, with its model.
  std::pair<const TruncatedModel*, int> locate(const Assignment& a, int x) {
    const FaceComplex& fc = ds_.fc;
    const CellKind k = fc.kind;
    if (a.region == Region::Boundary) {
      const TruncatedModel& m = generic("H" + a.kind.label(), a.kind);
      const QVec A = Rat(ds_.N) * fc.corner(a.edge);
      const QVec E = fc.edge_dir(a.edge);
      for (const auto& ch : ds_.vertex(x).charts) {
        if (ch.face != a.face) continue;
        const QVec v = ch.local - A;
        const Rat s = dot(k, v, E) / norm2(k, E);
        const Rat si = floor_rat(s + Rat(1, 2));
        return {&m, edge_model_vertex(m, k, a.edge, A + si * E, ch.local)};
      }
      return {&m, -1};
    }
    const Singularity& s = ds_.singularities[a.singularity];
    if (s.kind == SingularityKind::Puncture) {
      const QVec P = ds_.puncture_points[s.puncture];
      const QVec frac{P.a - floor_rat(P.a), P.b - floor_rat(P.b)};
      auto& slot = models_["P" + std::to_string(a.singularity)];
      if (!slot) slot = std::make_unique<TruncatedModel>(build_punctured_model(s.M, ds_.lattice, ds_.N, p_.R, frac));
      for (const auto& ch : ds_.vertex(x).charts)
        if (ch.face == ds_.spec.punctures[s.puncture].face) return {slot.get(), slot->locate(0, slot->tip[0] + (ch.local - P))};
      return {slot.get(), -1};
    }
    if (s.wedges == 0) {
      const TruncatedModel& m = generic("S" + a.kind.label(), a.kind);
      const QVec q = Rat(ds_.N) * s.point;
      if (!is_integer(q.a) || !is_integer(q.b)) fail(ErrorKind::MeshIncompatible, "split point off the mesh");
      for (int e = 0; e < fc.sides; ++e) {
        const auto& sd = fc.side[s.face][e];
        if (sd.glued || sd.bc.split == Rat(1) || fc.corner(e) + sd.bc.split * fc.edge_dir(e) != s.point) continue;
        for (const auto& ch : ds_.vertex(x).charts)
          if (ch.face == s.face) return {&m, edge_model_vertex(m, k, e, q, ch.local)};
      }
      return {&m, -1};
    }
    auto& slot = models_["C" + std::to_string(a.singularity)];
    if (!slot) slot = std::make_unique<TruncatedModel>(build_corner_model(ds_, s.corner_class, p_.R));
    return {slot.get(), corner_model_vertex(*slot, ds_, s.corner_class, x)};
  }

 private:
  const TruncatedModel& generic(const std::string& key, const ModelKind& kind) {
    auto& slot = models_[key];
    if (!slot) slot = std::make_unique<TruncatedModel>(build_model(kind, ds_.lattice, ds_.N, p_.R));
    return *slot;
  }

  const DiscreteSurface& ds_;
  const KeyFormulaParams& p_;
  std::map<std::string, std::unique_ptr<TruncatedModel>> models_;
};

}  // namespace detail

// With a = delta^-2 and g(l) = -gamma - log l - E1(a l) (g(0) = log a), for
// each vertex x with spectral weights c_j = |v_j(x)|^2 and plane class c:
//   plane x:  T2 = sum c_j g(l_j) - d (V_c - J_c - gamma - log w_c), T3 = -d J_c, T4 = 0;
//   model x:  with the model's Gauss measure (c'_j, m_j) at the image of x,
//             T2 = sum c_j g(l_j) - sum c'_j g(m_j), T3 = -sum c'_j E1(a m_j),
//             T4 = sum c'_j log(w_c / m_j) - d V_c;
//   T5 = d (V_c - log w_c), T1 = sum_{l != 0} E1(a l), T6 = 2k log delta - k gamma,
// where V_c = int_0^inf (P_plane - e^{-w_c t}) dt/t and J_c = int_a^inf P_plane dt/t.
inline KeyFormulaReport evaluate(const DiscreteSurface& ds, const Spectrum& S, const KeyFormulaParams& p) {
  if (!S.vectors) fail(ErrorKind::MissingVectors, "key formula needs eigenvectors");
  const int d = S.d;
  const int nv = ds.n_active();
  const double delta = ds.delta;
  const double a = 1.0 / (delta * delta);
  const double thr = S.zero_threshold();
  const LatticeSpec& lat = ds.lattice;
  KeyFormulaReport rep;
  double abs_sum[6] = {0, 0, 0, 0, 0, 0};
  auto add = [&](int i, double v) {
    rep.T[i] += v;
    abs_sum[i] += std::abs(v);
  };

  auto g = [&](double l) { return l < thr ? std::log(a) : -p.gamma - std::log(l) - expint_e1(a * l); };
  Eigen::VectorXd gl(S.n());
  for (int j = 0; j < S.n(); ++j) {
    gl(j) = g(S.eigenvalues(j));
    if (S.eigenvalues(j) >= thr) add(0, expint_e1(a * S.eigenvalues(j)));
  }
  const Eigen::MatrixXd W = S.vectors->cwiseAbs2();

  std::vector<double> V(lat.class_count()), J(lat.class_count()), w(lat.class_count());
  for (int c = 0; c < lat.class_count(); ++c) {
    w[c] = lat.total_weight(c);
    V[c] = plane_volume_integral(lat, c);
    J[c] = plane_tail_integral(lat, c, a);
  }

  detail::ModelCache cache(ds, p);
  for (int x = 0; x < nv; ++x) {
    const int c = ds.vertex(x).lattice_class;
    double G = 0.0;
    for (int i = 0; i < d; ++i) G += W.row(d * x + i).dot(gl);
    const Assignment asg = assign_model(ds, x, p);
    rep.assignments[asg.kind.label()] += 1;
    add(4, d * (V[c] - std::log(w[c])));
    if (asg.region == Region::Plane) {
      add(1, G - d * (V[c] - J[c] - p.gamma - std::log(w[c])));
      add(2, -d * J[c]);
      continue;
    }
    const auto [m, y] = cache.locate(asg, x);
    if (y < 0)
      fail(ErrorKind::TruncationBudgetExceeded, "vertex " + std::to_string(x) + " has no image in model " + asg.kind.label());
    if (m->d() != d) fail(ErrorKind::SchemaError, "model rank differs from the bundle rank");
    const SpectralMeasure mu = block_measure(m->L, y, p.lanczos_steps);
    double Gm = 0.0, E = 0.0, L = 0.0;
    for (std::size_t j = 0; j < mu.nodes.size(); ++j) {
      const double l = std::max(mu.nodes[j], 1e-300);
      Gm += mu.weights[j] * g(l);
      E += mu.weights[j] * expint_e1(a * l);
      L += mu.weights[j] * std::log(w[c] / l);
    }
    add(1, G - Gm);
    add(2, -E);
    add(3, L - d * V[c]);
  }
  add(5, 2.0 * S.kernel_dim * std::log(delta) - S.kernel_dim * p.gamma);

  double A = 0.0;
  if (lat.class_count() == 1) A = lattice_constant_A(lat);
  else
    for (int x = 0; x < nv; ++x) {
      const int c = ds.vertex(x).lattice_class;
      A += (std::log(w[c]) - V[c]) / nv;
    }
  rep.t5_from_A = -d * A * nv;

  rep.lhs = -logdet_star(S);
  rep.residual = rep.lhs - rep.sum();
  double scale = std::abs(rep.lhs);
  for (int i = 0; i < 6; ++i) {
    rep.budget_T[i] = p.rounding * (1.0 + abs_sum[i]);
    rep.budget += rep.budget_T[i];
    scale += abs_sum[i];
  }
  rep.budget += p.rounding * scale;
  if (!(std::abs(rep.residual) <= rep.budget)) {
    std::string msg = "key formula residual " + std::to_string(rep.residual) + " exceeds budget " +
                      std::to_string(rep.budget) + "; terms";
    for (int i = 0; i < 6; ++i) msg += " T" + std::to_string(i + 1) + "=" + std::to_string(rep.T[i]);
    fail(ErrorKind::BudgetExceeded, msg);
  }
  return rep;
}

inline KeyFormulaReport evaluate(const DiscreteSurface& ds, const KeyFormulaParams& p = {}) {
  return evaluate(ds, eigensolve(assemble(ds), true), p);
}

}  // namespace lapdet
