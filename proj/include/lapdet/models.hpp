#pragma once
// Truncated model surfaces (plane, half-plane, cone, wedge, punctured plane)
// and the integrals of differences of their diagonal heat kernels.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/gauss.hpp>

#include "lapdet/discrete_surface.hpp"
#include "lapdet/errors.hpp"
#include "lapdet/geometry.hpp"
#include "lapdet/lattice.hpp"
#include "lapdet/operator.hpp"
#include "lapdet/spectral.hpp"
#include "lapdet/special.hpp"
#include "lapdet/surface.hpp"

namespace lapdet {

enum class ModelFamily { Plane, HalfPlane, Cone, Wedge, PuncturedPlane };

struct ModelKind {
  ModelFamily family = ModelFamily::Plane;
  double alpha = 2.0 * kPi;
  BC b0 = BC::Dirichlet;  // side at arg 0
  BC b1 = BC::Dirichlet;  // side at arg alpha
  Mat M;                  // PuncturedPlane only

  static ModelKind plane() { return {}; }
  static ModelKind half_plane(BC b) { return {ModelFamily::HalfPlane, kPi, b, b, {}}; }
  static ModelKind cone(double alpha) { return {ModelFamily::Cone, alpha, BC::Dirichlet, BC::Dirichlet, {}}; }
  static ModelKind wedge(double alpha, BC b0, BC b1) { return {ModelFamily::Wedge, alpha, b0, b1, {}}; }
  static ModelKind punctured(const Mat& M) { return {ModelFamily::PuncturedPlane, 2.0 * kPi, BC::Dirichlet, BC::Dirichlet, M}; }

  int rank() const { return family == ModelFamily::PuncturedPlane ? static_cast<int>(M.rows()) : 1; }

  std::string label() const {
    auto deg = [](double a) { return std::to_string(static_cast<int>(std::lround(a * 180.0 / kPi))); };
    switch (family) {
      case ModelFamily::Plane: return "Plane";
      case ModelFamily::HalfPlane: return std::string("HalfPlane(") + bc_char(b0) + ")";
      case ModelFamily::Cone: return "Cone(" + deg(alpha) + ")";
      case ModelFamily::Wedge: return "Wedge(" + deg(alpha) + "," + bc_char(b0) + bc_char(b1) + ")";
      case ModelFamily::PuncturedPlane: return "PuncturedPlane(d=" + std::to_string(M.rows()) + ")";
    }
    return "?";
  }
};

struct TruncatedModel {
  ModelKind kind;
  int N = 0;       // mesh points per macroscopic unit
  double R = 0.0;  // truncation radius, macroscopic units
  int scale = 1;   // face size in macroscopic units
  int sectors = 0; // faces around the tip, generic models
  DiscreteSurface ds;
  TwistedLaplacian L;
  std::vector<QVec> tip;  // per face, mesh coordinates of the centre
  int basepoint = -1;
  std::map<std::pair<int, QVec>, int> where;

  int n() const { return L.n(); }
  int d() const { return L.d; }

  // Active index of the vertex at `local` in `face`, or -1.
  int locate(int face, const QVec& local) const {
    auto it = where.find({face, local});
    return it == where.end() ? -1 : it->second;
  }

  // Generic models: the plane frame in which face j is the sector
  // [j theta, (j + 1) theta] reached by rotating face 0.
  int locate_global(const QVec& w) const {
    const CellKind k = ds.lattice.cell_kind;
    if (w == QVec{}) return locate(0, w);
    const double th = face_angle(k);
    double phi = std::arg(embed(k, w));
    if (phi < -1e-12) phi += 2.0 * kPi;
    phi = std::max(phi, 0.0);
    int j = static_cast<int>(std::floor(phi / th + 1e-9));
    j = std::min(j, sectors - 1);
    if (phi > sectors * th + 1e-9) return -1;
    IMat Rinv = rotation_generator(k).inverse(), P;
    for (int i = 0; i < j; ++i) P = Rinv * P;
    return locate(j, P(w));
  }
};

namespace detail {

inline int sectors_for(CellKind k, double alpha) {
  const double q = alpha / face_angle(k);
  const long r = std::lround(q);
  if (r < 1 || std::abs(q - r) > 1e-9)
    fail(ErrorKind::AngleNotRepresentable, "angle " + std::to_string(alpha) + " is not a multiple of the face angle");
  return static_cast<int>(r);
}

// Face size in macroscopic units so that the far sides lie beyond R + 1.
inline int face_scale(CellKind k, double R) {
  return k == CellKind::Quadrangulation ? static_cast<int>(std::ceil(R)) + 1
                                        : static_cast<int>(std::ceil(R * 2.0 / std::sqrt(3.0))) + 1;
}

inline void finish_model(TruncatedModel& m, const SurfaceSpec& spec, const LatticeSpec& lat) {
  const CellKind k = lat.cell_kind;
  const double rad = m.R * m.N;
  const std::vector<QVec> tips = m.tip;
  DiscretizeOptions opt;
  opt.keep = [tips, rad, k](int face, const QVec& local) {
    return std::abs(embed(k, local - tips[face])) <= rad + 1e-9;
  };
  m.ds = discretize(spec, lat, m.N * m.scale, opt);
  m.L = assemble(m.ds);
  for (int a = 0; a < m.ds.n_active(); ++a)
    for (const auto& c : m.ds.vertex(a).charts) m.where[{c.face, c.local}] = a;
}

inline SurfaceSpec sector_spec(CellKind k, int faces, bool closed, BC b0, BC b1, int rank) {
  const int S = side_count(k);
  SurfaceSpec s;
  s.face_kind = k;
  s.face_count = faces;
  s.rank = rank;
  for (int j = 0; j + 1 < faces; ++j) s.gluings.push_back({j, S - 1, j + 1, 0, false, identity(rank)});
  if (closed) s.gluings.push_back({faces - 1, S - 1, 0, 0, false, identity(rank)});
  for (int j = 0; j < faces; ++j)
    for (int e = 0; e < S; ++e) {
      if (e == S - 1 && (closed || j + 1 < faces)) continue;
      if (e == 0 && (closed || j > 0)) continue;
      BC b = BC::Dirichlet;
      if (!closed && j == 0 && e == 0) b = b0;
      if (!closed && j == faces - 1 && e == S - 1) b = b1;
      s.boundary.push_back({j, e, b, b, Rat(1)});
    }
  return s;
}

}  // namespace detail

// Models built by gluing faces around a common tip; the plane is Cone(2 pi).
inline TruncatedModel build_model(const ModelKind& kind, const LatticeSpec& lat, int N, double R) {
  if (R < 2.0) fail(ErrorKind::TruncationBudgetExceeded, "truncation radius must be at least 2");
  if (kind.family == ModelFamily::PuncturedPlane)
    fail(ErrorKind::SchemaError, "punctured models are built with build_punctured_model");
  const CellKind k = lat.cell_kind;
  TruncatedModel m;
  m.kind = kind;
  m.N = N;
  m.R = R;
  m.scale = detail::face_scale(k, R);
  const bool closed = kind.family == ModelFamily::Plane || kind.family == ModelFamily::Cone;
  const double alpha = kind.family == ModelFamily::Plane ? 2.0 * kPi : kind.alpha;
  m.sectors = detail::sectors_for(k, alpha);
  m.tip.assign(m.sectors, QVec{});
  detail::finish_model(m, detail::sector_spec(k, m.sectors, closed, kind.b0, kind.b1, 1), lat);
  m.basepoint = m.locate_global({Rat(0), Rat(N)});
  return m;
}

// Punctured plane: one large face with the puncture near its centre at the
// same position relative to the lattice as `frac`, cut along (1, 0).
inline TruncatedModel build_punctured_model(const Mat& M, const LatticeSpec& lat, int N, double R, const QVec& frac) {
  if (R < 2.0) fail(ErrorKind::TruncationBudgetExceeded, "truncation radius must be at least 2");
  const CellKind k = lat.cell_kind;
  TruncatedModel m;
  m.kind = ModelKind::punctured(M);
  m.N = N;
  m.R = R;
  m.scale = k == CellKind::Quadrangulation ? 2 * (static_cast<int>(std::ceil(R)) + 1)
                                           : static_cast<int>(std::ceil(2.0 * std::sqrt(3.0) * (R + 1.0)));
  const std::int64_t n = static_cast<std::int64_t>(N) * m.scale;
  const std::int64_t c = k == CellKind::Quadrangulation ? n / 2 : n / 3;
  const QVec P = QVec{Rat(c), Rat(c)} + frac;
  m.tip = {P};
  SurfaceSpec s;
  s.face_kind = k;
  s.rank = static_cast<int>(M.rows());
  for (int e = 0; e < side_count(k); ++e) s.boundary.push_back({0, e, BC::Dirichlet, BC::Dirichlet, Rat(1)});
  s.punctures.push_back({0, Rat(1, n) * P, M, QVec{Rat(1), Rat(0)}});
  detail::finish_model(m, s, lat);
  if (m.ds.puncture_points.empty() || m.ds.puncture_points[0] != P)
    fail(ErrorKind::PunctureOnEdge, "model puncture moved off its requested position");
  m.basepoint = m.locate(0, QVec{Rat(c), Rat(c + N)});
  return m;
}

// Model made of copies of the wedges of a corner class of `surf`, enlarged
// about the tip and glued as on the surface. Face i corresponds to wedge i.
inline TruncatedModel build_corner_model(const DiscreteSurface& surf, int corner_class, double R) {
  if (R < 2.0) fail(ErrorKind::TruncationBudgetExceeded, "truncation radius must be at least 2");
  const FaceComplex& fc = surf.fc;
  const CornerClass& cc = fc.corners.at(corner_class);
  if (!cc.boundary && cc.holonomy_defect > 1e-9)
    fail(ErrorKind::NonScalarCovariance, "corner class with non-trivial holonomy has no corner model");
  const CellKind k = fc.kind;
  const int S = fc.sides;
  const int W = static_cast<int>(cc.wedges.size());
  TruncatedModel m;
  m.kind = cc.boundary ? ModelKind::wedge(cc.angle, cc.bc_last, cc.bc_first) : ModelKind::cone(cc.angle);
  m.N = surf.N;
  m.R = R;
  m.scale = detail::face_scale(k, R);
  auto index_of = [&](int f, int c) {
    for (int i = 0; i < W; ++i)
      if (cc.wedges[i] == std::make_pair(f, c)) return i;
    fail(ErrorKind::SchemaError, "corner walk left its class");
  };
  SurfaceSpec s;
  s.face_kind = k;
  s.face_count = W;
  s.rank = fc.rank;
  std::set<std::pair<int, int>> done;
  const Rat big(static_cast<std::int64_t>(m.N) * m.scale);
  for (int i = 0; i < W; ++i) {
    const auto [f, c] = cc.wedges[i];
    m.tip.push_back(big * fc.corner(c));
    for (int e = 0; e < S; ++e) {
      if (done.count({i, e})) continue;
      const bool at_tip = e == c || e == (c + S - 1) % S;
      const auto& sd = fc.side[f][e];
      if (at_tip && sd.glued) {
        const int nc = (e == c) ? (sd.flip ? sd.pe : (sd.pe + 1) % S) : (sd.flip ? (sd.pe + 1) % S : sd.pe);
        const int j = index_of(sd.pf, nc);
        s.gluings.push_back({i, e, j, sd.pe, sd.flip, sd.U});
        done.insert({i, e});
        done.insert({j, sd.pe});
      } else {
        BC b = BC::Dirichlet;
        if (at_tip) b = e == c ? sd.bc.before : sd.bc.after;
        s.boundary.push_back({i, e, b, b, Rat(1)});
        done.insert({i, e});
      }
    }
  }
  detail::finish_model(m, s, surf.lattice);
  return m;
}

// Image in a corner model of a surface vertex with a chart in wedge `wedge`.
inline int corner_model_vertex(const TruncatedModel& m, const DiscreteSurface& surf, int corner_class, int x) {
  const CornerClass& cc = surf.fc.corners.at(corner_class);
  const Rat shift(static_cast<std::int64_t>(surf.N) * (m.scale - 1));
  for (const auto& ch : surf.vertex(x).charts)
    for (int i = 0; i < static_cast<int>(cc.wedges.size()); ++i) {
      if (cc.wedges[i].first != ch.face) continue;
      const QVec p = ch.local + shift * surf.fc.corner(cc.wedges[i].second);
      const int a = m.locate(i, p);
      if (a >= 0) return a;
    }
  return -1;
}

// Image in a generic half-plane or wedge-of-angle-pi model of a vertex chart
// (face, p), where `q` is a mesh point on edge e of the face.
inline int edge_model_vertex(const TruncatedModel& m, CellKind k, int e, const QVec& q, const QVec& p) {
  const int step = k == CellKind::Quadrangulation ? 1 : 2;
  const IMat Rinv = rotation_generator(k).inverse();
  IMat L;
  for (int i = 0; i < step * e; ++i) L = Rinv * L;
  return m.locate_global(L(p - q));
}

// ---------------------------------------------------------------------------
// Spectral measures at a basepoint

struct SpectralMeasure {
  std::vector<double> nodes;
  std::vector<double> weights;

  double integrate(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
  double mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

// Gauss quadrature of the measure sum_j |<e_row, v_j>|^2 delta_{lambda_j}
// by Lanczos with full reorthogonalisation; exact once `steps` reaches the
// dimension of the Krylov space.
inline SpectralMeasure lanczos_measure(const SparseC& A, int row, int steps) {
  const int n = static_cast<int>(A.rows());
  steps = std::min(steps, n);
  Eigen::MatrixXcd Q(n, steps);
  std::vector<double> al, be;
  Eigen::VectorXcd q = Eigen::VectorXcd::Zero(n);
  q(row) = 1.0;
  Q.col(0) = q;
  const double scale = std::max(1.0, detail::max_abs(A));
  for (int j = 0; j < steps; ++j) {
    Eigen::VectorXcd r = A * Q.col(j);
    al.push_back(std::real(Q.col(j).dot(r)));
    for (int pass = 0; pass < 2; ++pass) r -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).adjoint() * r);
    const double b = r.norm();
    if (j + 1 == steps || b < 1e-12 * scale) break;
    be.push_back(b);
    Q.col(j + 1) = r / b;
  }
  const int m = static_cast<int>(al.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) T(i, i) = al[i];
  for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = be[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  SpectralMeasure mu;
  for (int i = 0; i < m; ++i) {
    mu.nodes.push_back(es.eigenvalues()(i));
    mu.weights.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return mu;
}

// Sum over the d fibre directions at vertex x.
inline SpectralMeasure block_measure(const TwistedLaplacian& L, int x, int steps) {
  SpectralMeasure mu;
  for (int i = 0; i < L.d; ++i) {
    const SpectralMeasure part = lanczos_measure(L.matrix, L.d * x + i, steps);
    mu.nodes.insert(mu.nodes.end(), part.nodes.begin(), part.nodes.end());
    mu.weights.insert(mu.weights.end(), part.weights.begin(), part.weights.end());
  }
  return mu;
}

// Largest macroscopic time certified by the truncation radius.
inline double certified_t_max(const TruncatedModel& m) { return m.R >= 6.0 ? (m.R / 6.0) * (m.R / 6.0) : 0.0; }

// Tr P(x, x, t) at walk time t.
inline double model_diag_kernel(const TruncatedModel& m, int x, double t, int steps = 400) {
  const double tm = t / (static_cast<double>(m.N) * m.N);
  if (tm > certified_t_max(m) * (1.0 + 1e-12))
    fail(ErrorKind::TruncationBudgetExceeded, "macroscopic time " + std::to_string(tm) + " beyond the certified " +
                                                  std::to_string(certified_t_max(m)));
  return block_measure(m.L, x, steps).integrate([t](double l) { return std::exp(-t * l); });
}

// ---------------------------------------------------------------------------
// I-integrals

namespace detail {

// Tr (H + s)^{-1} at one vertex, with the symbolic factorisation shared over s.
class ResolventDiag {
 public:
  ResolventDiag(const TwistedLaplacian& L, int x) : d_(L.d), x_(x), real_(is_real(L.matrix)) {
    if (real_) {
      Ar_ = real_part(L.matrix);
      Ir_.resize(Ar_.rows(), Ar_.cols());
      Ir_.setIdentity();
      lr_.analyzePattern(Ar_);
    } else {
      Ac_ = L.matrix;
      Ic_.resize(Ac_.rows(), Ac_.cols());
      Ic_.setIdentity();
      lc_.analyzePattern(Ac_);
    }
  }

  double operator()(double s) {
    auto it = memo_.find(s);
    if (it != memo_.end()) return it->second;
    double v = 0.0;
    if (real_) {
      lr_.factorize(Ar_ + s * Ir_);
      if (lr_.info() != Eigen::Success) fail(ErrorKind::QuadratureFailure, "resolvent factorisation failed");
      for (int i = 0; i < d_; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(Ar_.rows());
        e(d_ * x_ + i) = 1.0;
        v += lr_.solve(e)(d_ * x_ + i);
      }
    } else {
      lc_.factorize(Ac_ + cplx(s) * Ic_);
      if (lc_.info() != Eigen::Success) fail(ErrorKind::QuadratureFailure, "resolvent factorisation failed");
      for (int i = 0; i < d_; ++i) {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(Ac_.rows());
        e(d_ * x_ + i) = 1.0;
        v += std::real(lc_.solve(e)(d_ * x_ + i));
      }
    }
    memo_[s] = v;
    return v;
  }

 private:
  int d_, x_;
  bool real_;
  Eigen::SparseMatrix<double> Ar_, Ir_;
  SparseC Ac_, Ic_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> lr_;
  Eigen::SimplicialLDLT<SparseC> lc_;
  std::map<double, double> memo_;
};

// int_0^inf (g2(s) - g1(s)) ds with s = e^u on fixed Gauss-Legendre panels
// of width 2 in u. Below s_lo the integrand is flat in s; above s_hi the two
// resolvents agree to a high power of 1/s because the graphs coincide near x.
template <class G2, class G1>
double resolvent_difference(G2& g2, G1& g1, double s_lo, double s_hi = 1e2) {
  using GL = boost::math::quadrature::gauss<double, 10>;
  auto f = [&](double u) {
    const double s = std::exp(u);
    return s * (g2(s) - g1(s));
  };
  const double a = std::log(s_lo), b = std::log(s_hi);
  const int panels = static_cast<int>(std::ceil((b - a) / 2.0));
  double body = 0.0;
  for (int i = 0; i < panels; ++i) body += GL::integrate(f, a + (b - a) * i / panels, a + (b - a) * (i + 1) / panels);
  if (!std::isfinite(body)) fail(ErrorKind::QuadratureFailure, "non-finite I-integral");
  return body + s_lo * (g2(s_lo) - g1(s_lo));
}

// Far below the smallest eigenvalue of a Dirichlet disk of radius R N.
inline double resolvent_floor(const TruncatedModel& m) { return 1e-4 / ((m.R * m.N) * (m.R * m.N)); }

}  // namespace detail

// int_0^inf (Tr P2(x2, x2, t) - Tr P1(x1, x1, t)) dt/t in walk time, through
// the resolvent: sum c1 log mu1 - sum c2 log mu2 = int_0^inf (R2 - R1)(s) ds.
inline double i_integral(const TruncatedModel& m2, int x2, const TruncatedModel& m1, int x1) {
  if (m1.N != m2.N || m1.d() != m2.d() || m1.ds.lattice.name != m2.ds.lattice.name)
    fail(ErrorKind::SchemaError, "I-integral needs models on the same lattice and mesh");
  if (x1 < 0 || x2 < 0) fail(ErrorKind::SchemaError, "I-integral basepoint missing from a model");
  if (&m1 == &m2 && x1 == x2) return 0.0;
  detail::ResolventDiag r2(m2.L, x2), r1(m1.L, x1);
  return detail::resolvent_difference(r2, r1, std::min(detail::resolvent_floor(m1), detail::resolvent_floor(m2)));
}

inline double i_integral(const TruncatedModel& m2, const TruncatedModel& m1) {
  return i_integral(m2, m2.basepoint, m1, m1.basepoint);
}

struct IIntegralEstimate {
  std::vector<double> radii;
  std::vector<double> values;  // delta^-2 I at each radius
  double extrapolated = 0.0;   // Richardson in 1/R^2 from the last two radii
};

// delta^-2 I for each kind against the plane, basepoint at macroscopic
// distance 1 from the tip along the second basis direction, at several
// truncation radii; the plane resolvent is shared between kinds.
inline std::vector<IIntegralEstimate> i_integral_vs_plane(const std::vector<ModelKind>& kinds, const LatticeSpec& lat,
                                                          int N, const std::vector<double>& radii) {
  if (radii.size() < 2) fail(ErrorKind::SchemaError, "extrapolation needs two radii");
  std::vector<IIntegralEstimate> est(kinds.size());
  const double delta = lat.delta0() / N;
  for (double R : radii) {
    const TruncatedModel plane = build_model(ModelKind::plane(), lat, N, R);
    detail::ResolventDiag r1(plane.L, plane.basepoint);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      const TruncatedModel m = build_model(kinds[i], lat, N, R);
      if (m.basepoint < 0) fail(ErrorKind::SchemaError, "basepoint outside the model " + kinds[i].label());
      detail::ResolventDiag r2(m.L, m.basepoint);
      est[i].radii.push_back(R);
      est[i].values.push_back(detail::resolvent_difference(r2, r1, detail::resolvent_floor(plane)) / (delta * delta));
    }
  }
  for (auto& e : est) {
    const std::size_t n = e.values.size();
    const double a = e.radii[n - 2] * e.radii[n - 2], b = e.radii[n - 1] * e.radii[n - 1];
    e.extrapolated = (b * e.values[n - 1] - a * e.values[n - 2]) / (b - a);
  }
  return est;
}

inline IIntegralEstimate i_integral_vs_plane(const ModelKind& kind, const LatticeSpec& lat, int N,
                                             const std::vector<double>& radii) {
  return i_integral_vs_plane(std::vector<ModelKind>{kind}, lat, N, radii).front();
}

// Method of images: P_H(x, x) - P_C(x, x) - s P_C(x, xbar) over a few times,
// dense on both truncations. xbar is the mirror image of x in the doubled model.
inline double reflection_defect(const LatticeSpec& lat, const ModelKind& half, const ModelKind& doubled, const QVec& x,
                                const QVec& xbar, int N = 3, double R = 2.0) {
  const auto mh = build_model(half, lat, N, R);
  const auto mc = build_model(doubled, lat, N, R);
  const auto Sh = eigensolve(mh.L, true);
  const auto Sc = eigensolve(mc.L, true);
  const int a = mh.locate_global(x), b = mc.locate_global(x), c = mc.locate_global(xbar);
  if (a < 0 || b < 0 || c < 0) return 1e300;
  const int s = bc_sign(half.b0);
  double worst = 0.0;
  for (double t : {0.2, 1.0, 5.0, 25.0, 125.0}) {
    const auto Pc = heat_matrix(Sc, t);
    const double ph = heat_diag(Sh, a, t)(0, 0).real();
    worst = std::max(worst, std::abs(ph - Pc(b, b).real() - s * Pc(b, c).real()));
  }
  return worst;
}

}  // namespace lapdet
