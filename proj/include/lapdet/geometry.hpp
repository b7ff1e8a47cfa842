#pragma once
// Exact planar coordinates in a lattice basis.
// Square cells use the basis (1, i); triangular cells use (1, w) with
// w = 1/2 + i*sqrt(3)/2.  All affine tests are basis independent, so
// incidence and intersection are decided on rationals.

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <ostream>

#include <boost/rational.hpp>

namespace lapdet {

using Rat = boost::rational<std::int64_t>;

// Mixed comparisons with int recurse inside boost 1.74; route them through Rat.
inline bool operator==(const Rat& r, int i) { return r == Rat(i); }
inline bool operator!=(const Rat& r, int i) { return r != Rat(i); }
inline bool operator<(const Rat& r, int i) { return r < Rat(i); }
inline bool operator>(const Rat& r, int i) { return r > Rat(i); }
inline bool operator<=(const Rat& r, int i) { return r <= Rat(i); }
inline bool operator>=(const Rat& r, int i) { return r >= Rat(i); }

enum class CellKind { Quadrangulation, Triangulation };

struct QVec {
  Rat a{0};
  Rat b{0};

  friend QVec operator+(const QVec& u, const QVec& v) { return {u.a + v.a, u.b + v.b}; }
  friend QVec operator-(const QVec& u, const QVec& v) { return {u.a - v.a, u.b - v.b}; }
  friend QVec operator-(const QVec& u) { return {-u.a, -u.b}; }
  friend QVec operator*(const Rat& s, const QVec& u) { return {s * u.a, s * u.b}; }
  friend bool operator==(const QVec& u, const QVec& v) { return u.a == v.a && u.b == v.b; }
  friend bool operator!=(const QVec& u, const QVec& v) { return !(u == v); }
  friend bool operator<(const QVec& u, const QVec& v) { return u.a < v.a || (u.a == v.a && u.b < v.b); }
  friend std::ostream& operator<<(std::ostream& os, const QVec& u) { return os << '(' << u.a << ',' << u.b << ')'; }
};

inline double to_double(const Rat& r) { return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator()); }

inline Rat floor_rat(const Rat& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return Rat(q);
}

inline bool is_integer(const Rat& r) { return r.denominator() == 1; }

// Cross product in basis coordinates; its sign equals the Euclidean one
// because both bases are positively oriented.
inline Rat cross(const QVec& u, const QVec& v) { return u.a * v.b - u.b * v.a; }

// Squared Euclidean length.
inline Rat norm2(CellKind k, const QVec& u) {
  if (k == CellKind::Quadrangulation) return u.a * u.a + u.b * u.b;
  return u.a * u.a + u.a * u.b + u.b * u.b;
}

// Euclidean inner product.
inline Rat dot(CellKind k, const QVec& u, const QVec& v) {
  if (k == CellKind::Quadrangulation) return u.a * v.a + u.b * v.b;
  return u.a * v.a + (u.a * v.b + u.b * v.a) / 2 + u.b * v.b;
}

inline std::complex<double> embed(CellKind k, const QVec& u) {
  if (k == CellKind::Quadrangulation) return {to_double(u.a), to_double(u.b)};
  return {to_double(u.a) + 0.5 * to_double(u.b), 0.8660254037844386 * to_double(u.b)};
}

// Integer 2x2 matrix acting on basis coordinates.
struct IMat {
  std::array<std::int64_t, 4> m{1, 0, 0, 1};
  QVec operator()(const QVec& u) const { return {Rat(m[0]) * u.a + Rat(m[1]) * u.b, Rat(m[2]) * u.a + Rat(m[3]) * u.b}; }
  friend IMat operator*(const IMat& x, const IMat& y) {
    return {{x.m[0] * y.m[0] + x.m[1] * y.m[2], x.m[0] * y.m[1] + x.m[1] * y.m[3],
             x.m[2] * y.m[0] + x.m[3] * y.m[2], x.m[2] * y.m[1] + x.m[3] * y.m[3]}};
  }
  friend bool operator==(const IMat& x, const IMat& y) { return x.m == y.m; }
  std::int64_t det() const { return m[0] * m[3] - m[1] * m[2]; }
  IMat inverse() const {  // unimodular only
    const std::int64_t d = det();
    return {{m[3] * d, -m[1] * d, -m[2] * d, m[0] * d}};
  }
};

// Rotation by the face angle (pi/2 or pi/3) about the origin.
inline IMat rotation_generator(CellKind k) {
  if (k == CellKind::Quadrangulation) return {{0, -1, 1, 0}};
  return {{0, -1, 1, 1}};
}

// Reflection across the real axis.
inline IMat reflection_generator(CellKind k) {
  if (k == CellKind::Quadrangulation) return {{1, 0, 0, -1}};
  return {{1, 1, 0, -1}};
}

inline int rotation_order(CellKind k) { return k == CellKind::Quadrangulation ? 4 : 6; }

inline double face_angle(CellKind k) { return k == CellKind::Quadrangulation ? std::numbers::pi / 2 : std::numbers::pi / 3; }

// Affine map x -> L x + t on basis coordinates.
struct Affine {
  IMat L;
  QVec t;
  QVec operator()(const QVec& u) const { return L(u) + t; }
  Affine inverse() const {
    IMat Li = L.inverse();
    return {Li, -Li(t)};
  }
  friend Affine operator*(const Affine& f, const Affine& g) { return {f.L * g.L, f.L(g.t) + f.t}; }
};

struct QVecHash {
  std::size_t operator()(const QVec& u) const {
    auto h = [](const Rat& r) {
      return std::hash<std::int64_t>()(r.numerator()) * 31u + std::hash<std::int64_t>()(r.denominator());
    };
    return h(u.a) * 1000003u ^ h(u.b);
  }
};

}  // namespace lapdet
