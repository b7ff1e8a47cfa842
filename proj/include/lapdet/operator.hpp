#pragma once
// Twisted Laplacian on sections of a flat bundle over a discrete surface.

#include <cmath>
#include <ostream>
#include <queue>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lapdet/discrete_surface.hpp"
#include "lapdet/errors.hpp"
#include "lapdet/linalg.hpp"

namespace lapdet {

using SparseC = Eigen::SparseMatrix<cplx, Eigen::ColMajor, std::int64_t>;

// H acts as (Hf)(x) = sum_y w_xy (f(x) - s U_yx f(y)). Neumann reflection makes
// H symmetric only for the vertex masses m_x; `matrix` stores the Hermitian
// conjugate M^{1/2} H M^{-1/2}, which has the same spectrum.
struct TwistedLaplacian {
  int d = 1;
  int vertices = 0;
  SparseC matrix;
  std::vector<double> mass;
  int kernel_dim_expected = 0;
  double hermitian_defect = 0.0;

  int n() const { return d * vertices; }
};

namespace detail {

inline double symmetric_defect(const SparseC& A) {
  const SparseC D = A - SparseC(A.adjoint());
  double m = 0.0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (SparseC::InnerIterator it(D, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

inline double max_abs(const SparseC& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseC::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace detail

// Joint fixed space of all edge transports, as orthonormal columns in the
// coordinates of TwistedLaplacian::matrix.
inline Eigen::MatrixXcd covariant_constants(const DiscreteSurface& ds) {
  const int n = ds.n_active(), d = ds.rank;
  if (n == 0) return Eigen::MatrixXcd(0, 0);
  std::vector<std::vector<int>> out(n);
  for (std::size_t i = 0; i < ds.edges.size(); ++i) {
    const auto& e = ds.edges[i];
    if (e.to < 0) return Eigen::MatrixXcd(d * n, 0);  // f vanishes next to a removed vertex
    out[e.from].push_back(static_cast<int>(i));
  }
  // Parallel transport T_x: V_root -> V_x along a BFS tree, one tree per component.
  std::vector<Mat> T(n);
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (int r = 0; r < n; ++r) {
    if (comp[r] >= 0) continue;
    comp[r] = ncomp;
    T[r] = identity(d);
    std::queue<int> q;
    q.push(r);
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      for (int i : out[x]) {
        const auto& e = ds.edges[i];
        if (comp[e.to] >= 0) continue;
        comp[e.to] = ncomp;
        const double s = e.sign == 0 ? 1.0 : static_cast<double>(e.sign);
        T[e.to] = s * e.U * T[x];
        q.push(e.to);
      }
    }
    ++ncomp;
  }
  // Gram matrix of the stacked cycle constraints (s U T_x - T_y) per component.
  std::vector<Eigen::MatrixXcd> G(ncomp, Eigen::MatrixXcd::Zero(d, d));
  for (const auto& e : ds.edges) {
    const double s = e.sign == 0 ? 1.0 : static_cast<double>(e.sign);
    const Eigen::MatrixXcd A = s * e.U * T[e.from] - T[e.to];
    G[comp[e.from]] += A.adjoint() * A;
  }
  std::vector<Eigen::VectorXcd> cols;
  for (int c = 0; c < ncomp; ++c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G[c]);
    for (int j = 0; j < d; ++j) {
      if (std::sqrt(std::max(0.0, es.eigenvalues()(j))) >= 1e-10) continue;
      const Eigen::VectorXcd v = es.eigenvectors().col(j);
      Eigen::VectorXcd f = Eigen::VectorXcd::Zero(d * n);
      for (int x = 0; x < n; ++x)
        if (comp[x] == c) f.segment(d * x, d) = std::sqrt(ds.vertex(x).mass) * (T[x] * v);
      cols.push_back(f.normalized());
    }
  }
  Eigen::MatrixXcd Q(d * n, static_cast<int>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) Q.col(static_cast<int>(j)) = cols[j];
  if (Q.cols() > 1) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Q);
    Q = qr.householderQ() * Eigen::MatrixXcd::Identity(Q.rows(), Q.cols());
  }
  return Q;
}

inline TwistedLaplacian assemble(const DiscreteSurface& ds) {
  TwistedLaplacian L;
  L.d = ds.rank;
  L.vertices = ds.n_active();
  const int d = L.d;
  L.mass.resize(L.vertices);
  for (int a = 0; a < L.vertices; ++a) L.mass[a] = ds.vertex(a).mass;
  std::vector<Eigen::Triplet<cplx, std::int64_t>> trip;
  trip.reserve(ds.edges.size() * (d * d + d));
  for (const auto& e : ds.edges) {
    const std::int64_t x = e.from;
    for (int i = 0; i < d; ++i) trip.emplace_back(d * x + i, d * x + i, cplx(e.w, 0.0));
    if (e.to < 0) continue;
    const double s = e.sign == 0 ? 1.0 : static_cast<double>(e.sign);
    const double scale = -e.w * s * std::sqrt(L.mass[x] / L.mass[e.to]);
    const Mat Ui = e.U.adjoint();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (Ui(i, j) != cplx(0.0, 0.0)) trip.emplace_back(d * x + i, d * std::int64_t(e.to) + j, scale * Ui(i, j));
  }
  L.matrix.resize(L.n(), L.n());
  L.matrix.setFromTriplets(trip.begin(), trip.end());
  L.matrix.prune(cplx(0.0, 0.0));
  L.hermitian_defect = detail::symmetric_defect(L.matrix);
  if (L.hermitian_defect > 1e-14 * std::max(1.0, detail::max_abs(L.matrix)))
    fail(ErrorKind::NonSymmetrizable, "operator is not Hermitian after mass symmetrization (defect " +
                                          std::to_string(L.hermitian_defect) + ")");
  L.kernel_dim_expected = static_cast<int>(covariant_constants(ds).cols());
  return L;
}

inline TwistedLaplacian gauge_transform(const TwistedLaplacian& L, const std::vector<Mat>& g) {
  if (static_cast<int>(g.size()) != L.vertices) fail(ErrorKind::NonUnitaryGauge, "one gauge matrix per vertex required");
  std::vector<Eigen::Triplet<cplx, std::int64_t>> trip;
  for (int x = 0; x < L.vertices; ++x) {
    if (g[x].rows() != L.d || !is_unitary(g[x])) fail(ErrorKind::NonUnitaryGauge, "gauge matrix at vertex " + std::to_string(x));
    for (int i = 0; i < L.d; ++i)
      for (int j = 0; j < L.d; ++j) trip.emplace_back(L.d * x + i, L.d * x + j, g[x](i, j));
  }
  SparseC G(L.n(), L.n());
  G.setFromTriplets(trip.begin(), trip.end());
  TwistedLaplacian out = L;
  out.matrix = G * L.matrix * SparseC(G.adjoint());
  out.matrix.prune(cplx(0.0, 0.0));
  out.hermitian_defect = detail::symmetric_defect(out.matrix);
  return out;
}

// Hermitian form <Hf, f> in the mass inner product, written edge by edge.
inline double quadratic_form(const DiscreteSurface& ds, const Eigen::VectorXcd& f) {
  const int d = ds.rank;
  double q = 0.0;
  for (const auto& e : ds.edges) {
    const Eigen::VectorXcd fx = f.segment(d * e.from, d);
    const double m = ds.vertex(e.from).mass;
    if (e.to < 0) {
      q += m * e.w * fx.squaredNorm();
      continue;
    }
    const double s = e.sign == 0 ? 1.0 : static_cast<double>(e.sign);
    const Eigen::VectorXcd fy = f.segment(d * e.to, d);
    q += m * e.w * (fx.squaredNorm() - s * std::real(fx.dot(e.U.adjoint() * fy)));
  }
  return q;
}

// Coordinate export: one "row col re im" line per stored entry.
inline void write_coo(const TwistedLaplacian& L, std::ostream& os) {
  os.precision(17);
  for (int k = 0; k < L.matrix.outerSize(); ++k)
    for (SparseC::InnerIterator it(L.matrix, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

}  // namespace lapdet
