#pragma once
// Bi-periodic weighted lattices with periods (1, i) or (1, w).

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lapdet/errors.hpp"
#include "lapdet/geometry.hpp"

namespace lapdet {

struct LatticeEdge {
  int from = 0;
  int to = 0;
  int m = 0;  // period offset of the target
  int n = 0;
  double weight = 1.0;
};

struct LatticeSpec {
  std::string name;
  CellKind cell_kind = CellKind::Quadrangulation;
  std::vector<QVec> vertices;  // in [0,1)^2, basis coordinates
  std::vector<LatticeEdge> edges;

  double cell_area() const { return cell_kind == CellKind::Quadrangulation ? 1.0 : std::sqrt(3.0) / 2.0; }
  double delta0() const { return std::sqrt(cell_area() / static_cast<double>(vertices.size())); }
  int class_count() const { return static_cast<int>(vertices.size()); }

  QVec edge_vector(const LatticeEdge& e) const {
    return vertices[e.to] + QVec{Rat(e.m), Rat(e.n)} - vertices[e.from];
  }

  // Class of a point whose fractional part is a vertex position, or -1.
  int class_of(const QVec& p) const {
    QVec frac{p.a - floor_rat(p.a), p.b - floor_rat(p.b)};
    for (int c = 0; c < class_count(); ++c)
      if (vertices[c] == frac) return c;
    return -1;
  }

  std::vector<const LatticeEdge*> edges_from(int c) const {
    std::vector<const LatticeEdge*> out;
    for (const auto& e : edges)
      if (e.from == c) out.push_back(&e);
    return out;
  }

  double total_weight(int c) const {
    double w = 0.0;
    for (const auto& e : edges)
      if (e.from == c) w += e.weight;
    return w;
  }

  double max_total_weight() const {
    double w = 0.0;
    for (int c = 0; c < class_count(); ++c) w = std::max(w, total_weight(c));
    return w;
  }
};

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

inline LatticeSpec builtin_lattice(const std::string& name) {
  LatticeSpec s;
  s.name = name;
  auto add = [&](int f, int t, int m, int n) { s.edges.push_back({f, t, m, n, 1.0}); };
  if (name == "square" || name == "shifted_square") {
    s.cell_kind = CellKind::Quadrangulation;
    s.vertices = {name == "square" ? QVec{Rat(0), Rat(0)} : QVec{Rat(1, 2), Rat(1, 2)}};
    add(0, 0, 1, 0);
    add(0, 0, 0, 1);
    add(0, 0, -1, 0);
    add(0, 0, 0, -1);
  } else if (name == "triangular") {
    s.cell_kind = CellKind::Triangulation;
    s.vertices = {QVec{Rat(0), Rat(0)}};
    add(0, 0, 1, 0);
    add(0, 0, 0, 1);
    add(0, 0, -1, 1);
    add(0, 0, -1, 0);
    add(0, 0, 0, -1);
    add(0, 0, 1, -1);
  } else if (name == "hexagonal") {
    s.cell_kind = CellKind::Triangulation;
    s.vertices = {QVec{Rat(1, 3), Rat(1, 3)}, QVec{Rat(2, 3), Rat(2, 3)}};
    add(0, 1, 0, 0);
    add(0, 1, -1, 0);
    add(0, 1, 0, -1);
    add(1, 0, 0, 0);
    add(1, 0, 1, 0);
    add(1, 0, 0, 1);
  } else {
    fail(ErrorKind::SchemaError, "unknown lattice '" + name + "'");
  }
  return s;
}

// Per-class covariance sum_e w (y-x)(y-x)^T in Euclidean coordinates.
inline Eigen::Matrix2d class_covariance(const LatticeSpec& s, int c) {
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& e : s.edges) {
    if (e.from != c) continue;
    const auto z = embed(s.cell_kind, s.edge_vector(e));
    Eigen::Vector2d v(z.real(), z.imag());
    cov += e.weight * v * v.transpose();
  }
  return cov;
}

inline LatticeSpec normalize_weights(const LatticeSpec& spec) {
  const double d2 = spec.delta0() * spec.delta0();
  double factor = -1.0;
  for (int c = 0; c < spec.class_count(); ++c) {
    const Eigen::Matrix2d cov = class_covariance(spec, c);
    const double scale = 0.5 * cov.trace();
    if (!(scale > 0.0) || std::abs(cov(0, 1)) > 1e-12 * scale || std::abs(cov(0, 0) - cov(1, 1)) > 1e-12 * scale)
      fail(ErrorKind::NonScalarCovariance, "class " + std::to_string(c) + " of lattice " + spec.name);
    const double f = d2 / scale;
    if (factor < 0.0) factor = f;
    else if (std::abs(f - factor) > 1e-12 * factor)
      fail(ErrorKind::NonScalarCovariance, "classes of lattice " + spec.name + " need different factors");
  }
  LatticeSpec out = spec;
  if (std::abs(factor - 1.0) > 1e-15)
    for (auto& e : out.edges) e.weight *= factor;
  return out;
}

inline bool is_normalized(const LatticeSpec& spec) {
  const double d2 = spec.delta0() * spec.delta0();
  for (int c = 0; c < spec.class_count(); ++c)
    if (std::abs(0.5 * class_covariance(spec, c).trace() - d2) > 1e-12 * d2) return false;
  return true;
}

inline LatticeSpec normalized_lattice(const std::string& name) { return normalize_weights(builtin_lattice(name)); }

namespace detail {

inline std::string edge_str(const LatticeEdge& e) {
  std::ostringstream os;
  os << "(" << e.from << "->" << e.to << " offset " << e.m << "," << e.n << " w=" << e.weight << ")";
  return os.str();
}

// Checks that g maps the (classes, edges) structure to itself.
inline void check_symmetry(const LatticeSpec& s, const IMat& g, const std::string& label, ValidationReport& rep) {
  std::vector<int> sigma(s.class_count(), -1);
  for (int c = 0; c < s.class_count(); ++c) {
    sigma[c] = s.class_of(g(s.vertices[c]));
    if (sigma[c] < 0) {
      std::ostringstream os;
      os << label << ": vertex " << c << " " << s.vertices[c] << " maps off the lattice";
      rep.issues.push_back(os.str());
      return;
    }
  }
  for (const auto& e : s.edges) {
    const QVec v = g(s.edge_vector(e));
    bool found = false;
    for (const auto& f : s.edges) {
      if (f.from != sigma[e.from] || s.edge_vector(f) != v) continue;
      if (std::abs(f.weight - e.weight) <= 1e-12 * e.weight) found = true;
    }
    if (!found) rep.issues.push_back(label + ": no image for edge " + edge_str(e));
  }
}

}  // namespace detail

inline ValidationReport validate_symmetry(const LatticeSpec& s) {
  ValidationReport rep;
  if (s.vertices.empty()) rep.issues.push_back("no vertices");
  for (std::size_t c = 0; c < s.vertices.size(); ++c) {
    const auto& p = s.vertices[c];
    if (p.a < 0 || p.a >= 1 || p.b < 0 || p.b >= 1) rep.issues.push_back("vertex " + std::to_string(c) + " outside [0,1)^2");
  }
  for (const auto& e : s.edges) {
    if (e.from < 0 || e.to < 0 || e.from >= s.class_count() || e.to >= s.class_count()) {
      rep.issues.push_back("edge with invalid endpoint " + detail::edge_str(e));
      return rep;
    }
    if (!(e.weight > 0.0)) rep.issues.push_back("non-positive weight " + detail::edge_str(e));
    bool twin = false;
    for (const auto& f : s.edges)
      if (f.from == e.to && f.to == e.from && f.m == -e.m && f.n == -e.n && std::abs(f.weight - e.weight) <= 1e-12 * e.weight)
        twin = true;
    if (!twin) rep.issues.push_back("weight not symmetric at " + detail::edge_str(e));
  }
  if (!rep.ok()) return rep;
  detail::check_symmetry(s, rotation_generator(s.cell_kind), "rotation", rep);
  detail::check_symmetry(s, reflection_generator(s.cell_kind), "reflection", rep);

  // Connectivity inside one closed unit face.
  auto in_face = [&](const QVec& p) {
    if (p.a < 0 || p.b < 0) return false;
    if (s.cell_kind == CellKind::Quadrangulation) return p.a <= 1 && p.b <= 1;
    return p.a + p.b <= 1;
  };
  std::vector<std::pair<QVec, int>> pts;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int c = 0; c < s.class_count(); ++c) {
        QVec p = s.vertices[c] + QVec{Rat(i), Rat(j)};
        if (in_face(p)) pts.push_back({p, c});
      }
  std::vector<int> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (const auto& e : s.edges) {
      if (e.from != pts[i].second) continue;
      QVec q = pts[i].first + s.edge_vector(e);
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (pts[j].first == q) parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
    }
  std::size_t roots = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) roots += (find(static_cast<int>(i)) == static_cast<int>(i));
  if (pts.empty() || roots != 1) rep.issues.push_back("graph restricted to a unit face is not connected");
  return rep;
}

// JSON: {name, cell_kind, den, vertices:[[a,b],..], edges:[[from,to,m,n,w],..]}
inline nlohmann::json lattice_to_json(const LatticeSpec& s) {
  std::int64_t den = 1;
  for (const auto& v : s.vertices) den = std::lcm(den, std::lcm(v.a.denominator(), v.b.denominator()));
  nlohmann::json j;
  j["name"] = s.name;
  j["cell_kind"] = s.cell_kind == CellKind::Quadrangulation ? "quadrangulation" : "triangulation";
  j["den"] = den;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : s.vertices)
    j["vertices"].push_back({(v.a * den).numerator(), (v.b * den).numerator()});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : s.edges) j["edges"].push_back({e.from, e.to, e.m, e.n, e.weight});
  j["delta0"] = s.delta0();
  return j;
}

inline LatticeSpec lattice_from_json(const nlohmann::json& j) {
  try {
    LatticeSpec s;
    s.name = j.value("name", std::string("custom"));
    const std::string kind = j.at("cell_kind").get<std::string>();
    if (kind == "quadrangulation") s.cell_kind = CellKind::Quadrangulation;
    else if (kind == "triangulation") s.cell_kind = CellKind::Triangulation;
    else fail(ErrorKind::SchemaError, "cell_kind must be quadrangulation or triangulation");
    const std::int64_t den = j.value("den", std::int64_t{1});
    if (den <= 0) fail(ErrorKind::SchemaError, "den must be positive");
    for (const auto& v : j.at("vertices"))
      s.vertices.push_back({Rat(v.at(0).get<std::int64_t>(), den), Rat(v.at(1).get<std::int64_t>(), den)});
    for (const auto& e : j.at("edges")) {
      LatticeEdge le;
      le.from = e.at(0).get<int>();
      le.to = e.at(1).get<int>();
      le.m = e.at(2).get<int>();
      le.n = e.at(3).get<int>();
      le.weight = e.size() > 4 ? e.at(4).get<double>() : 1.0;
      s.edges.push_back(le);
    }
    return s;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::SchemaError, std::string("lattice document: ") + ex.what());
  }
}

}  // namespace lapdet
