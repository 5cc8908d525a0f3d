#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "lorentz/error.hpp"

// Lorentz (hyperboloid) model primitives, the Poincare-ball counterparts,
// and the maps between the two models. Points live on the upper sheet
// {x : <x,x>_L = -1, x0 > 0} of a two-sheeted hyperboloid in R^{n+1};
// all arithmetic is in double precision.

namespace lorentz {

using Vec = std::vector<double>;

constexpr double kOnManifoldTol = 1e-8;
constexpr double kZeroTangentTol = 1e-9;
constexpr double kPoincareBoundaryTol = 1e-12;

inline void check_same_dim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("dimension mismatch: " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  if (x.size() < 2) throw std::invalid_argument("ambient dimension must be >= 2");
}

/// Lorentzian scalar product <x,y>_L = -x0*y0 + sum_{i>=1} xi*yi.
inline double lorentz_inner(std::span<const double> x, std::span<const double> y) {
  check_same_dim(x, y);
  double s = -x[0] * y[0];
  for (size_t i = 1; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

// arcosh with the argument clamped to >= 1; rounding can push the argument
// to 1 - eps for near-coincident points.
inline double arcosh_clamped(double a) {
  if (a < 1.0) a = 1.0;
  return std::acosh(a);
}

inline double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

struct PoincarePoint {
  Vec coords;  // n spatial coordinates, euclidean norm < 1

  size_t dim() const { return coords.size(); }
  double norm() const { return std::sqrt(squared_norm(coords)); }
};

struct LorentzPoint {
  Vec coords;  // (x0, x1, ..., xn), x0 the time coordinate

  size_t ambient_dim() const { return coords.size(); }
  size_t spatial_dim() const { return coords.size() - 1; }
  std::span<const double> span() const { return coords; }
};

// A vector in the tangent space at `base`: <base, vec>_L = 0.
struct TangentVector {
  LorentzPoint base;
  Vec vec;
};

/// Lifts n spatial coordinates onto the hyperboloid: x0 = sqrt(1 + |spatial|^2).
inline LorentzPoint lift(std::span<const double> spatial) {
  LorentzPoint p;
  p.coords.resize(spatial.size() + 1);
  p.coords[0] = std::sqrt(1.0 + squared_norm(spatial));
  for (size_t i = 0; i < spatial.size(); ++i) p.coords[i + 1] = spatial[i];
  return p;
}

// Recomputes x0 from the spatial part, discarding the stored time coordinate.
// Used to repair floating-point drift after many optimization steps.
inline void renormalize_in_place(std::span<double> ambient) {
  double s = 0.0;
  for (size_t i = 1; i < ambient.size(); ++i) {
    if (!std::isfinite(ambient[i])) throw NumericError("renormalize: non-finite coordinate");
    s += ambient[i] * ambient[i];
  }
  ambient[0] = std::sqrt(1.0 + s);
}

inline LorentzPoint renormalize(std::span<const double> ambient) {
  if (ambient.size() < 2) throw std::invalid_argument("ambient dimension must be >= 2");
  LorentzPoint p;
  p.coords.assign(ambient.begin(), ambient.end());
  renormalize_in_place(p.coords);
  return p;
}

inline bool is_on_hyperboloid(std::span<const double> x, double tol = kOnManifoldTol) {
  if (x.size() < 2 || x[0] < 1.0) return false;
  return std::abs(lorentz_inner(x, x) + 1.0) <= tol;
}

/// Geodesic distance d(x,y) = arcosh(-<x,y>_L). Identical coordinates give
/// exactly 0 (the self-product rounds to slightly past -1 otherwise).
inline double lorentz_distance(std::span<const double> x, std::span<const double> y) {
  if (std::equal(x.begin(), x.end(), y.begin(), y.end())) return 0.0;
  return arcosh_clamped(-lorentz_inner(x, y));
}

inline double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y) {
  return lorentz_distance(x.span(), y.span());
}

/// Norm of a tangent vector, sqrt(<v,v>_L); tiny negative products from
/// rounding clamp to zero.
inline double tangent_norm(std::span<const double> v) {
  return std::sqrt(std::max(lorentz_inner(v, v), 0.0));
}

inline double tangent_norm(const TangentVector& v) { return tangent_norm(v.vec); }

// u <- u + <x,u>_L x, the orthogonal projection onto the tangent space at x.
inline void project_to_tangent_in_place(std::span<const double> x, std::span<double> u) {
  check_same_dim(x, u);
  const double c = lorentz_inner(x, u);
  for (size_t i = 0; i < u.size(); ++i) u[i] += c * x[i];
}

inline TangentVector project_to_tangent(const LorentzPoint& x, std::span<const double> u) {
  TangentVector t;
  t.base = x;
  t.vec.assign(u.begin(), u.end());
  project_to_tangent_in_place(x.span(), t.vec);
  return t;
}

// x <- cosh(|v|) x + sinh(|v|) v/|v|. Identity for |v| below the zero-tangent
// guard (the formula divides by |v|).
inline void exp_map_in_place(std::span<double> x, std::span<const double> v) {
  check_same_dim(x, v);
  const double n = tangent_norm(v);
  if (n < kZeroTangentTol) return;
  const double c = std::cosh(n);
  const double s = std::sinh(n) / n;
  for (size_t i = 0; i < x.size(); ++i) x[i] = c * x[i] + s * v[i];
}

/// Exponential map at x: follows the unit-speed geodesic in direction v for
/// arc length |v|_L.
inline LorentzPoint exp_map(const LorentzPoint& x, const TangentVector& v) {
  LorentzPoint out = x;
  exp_map_in_place(out.coords, v.vec);
  return out;
}

/// Maps a hyperboloid point into the Poincare ball: (x1..xn)/(x0 + 1).
inline PoincarePoint to_poincare(const LorentzPoint& x) {
  PoincarePoint u;
  u.coords.resize(x.spatial_dim());
  const double denom = x.coords[0] + 1.0;
  for (size_t i = 0; i < u.coords.size(); ++i) u.coords[i] = x.coords[i + 1] / denom;
  return u;
}

/// Inverse map into the hyperboloid: (1+|u|^2, 2u1..2un)/(1-|u|^2).
inline LorentzPoint from_poincare(const PoincarePoint& u) {
  const double sq = squared_norm(u.coords);
  if (sq >= (1.0 - kPoincareBoundaryTol) * (1.0 - kPoincareBoundaryTol))
    throw NumericError("from_poincare: point at or beyond the unit-ball boundary (|u| = " +
                       std::to_string(std::sqrt(sq)) + ")");
  const double denom = 1.0 - sq;
  LorentzPoint x;
  x.coords.resize(u.coords.size() + 1);
  x.coords[0] = (1.0 + sq) / denom;
  for (size_t i = 0; i < u.coords.size(); ++i) x.coords[i + 1] = 2.0 * u.coords[i] / denom;
  return x;
}

/// Poincare-ball distance, arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2))).
inline double poincare_distance(const PoincarePoint& u, const PoincarePoint& v) {
  check_same_dim(u.coords, v.coords);
  double diff = 0.0;
  for (size_t i = 0; i < u.coords.size(); ++i) {
    const double d = u.coords[i] - v.coords[i];
    diff += d * d;
  }
  const double a = 1.0 - squared_norm(u.coords);
  const double b = 1.0 - squared_norm(v.coords);
  return arcosh_clamped(1.0 + 2.0 * diff / (a * b));
}

}  // namespace lorentz
