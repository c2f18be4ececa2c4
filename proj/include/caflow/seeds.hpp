#pragma once

#include "caflow/body.hpp"

#include <cmath>
#include <vector>

namespace caflow::seeds {

inline Body ball(const GridPtr& grid, double R = 1.0) {
  if (!(R > 0)) throw DomainError("ball radius must be positive");
  return Body(grid, ScalarField(grid->size(), R));
}

/// Centered ellipsoid with the given semi-axes along the coordinate axes:
/// s(z) = sqrt(sum a_i^2 z_i^2).
inline Body ellipsoid(const GridPtr& grid, const std::vector<double>& axes) {
  const int d = grid->dim() + 1;
  if (static_cast<int>(axes.size()) != d) throw DomainError("ellipsoid needs " + std::to_string(d) + " semi-axes");
  for (double a : axes)
    if (!(a > 0)) throw DomainError("semi-axes must be positive");
  ScalarField s(grid->size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += axes[i] * axes[i] * grid->node(k)(i) * grid->node(k)(i);
    s[k] = std::sqrt(acc);
  }
  return Body(grid, std::move(s));
}

/// Legendre polynomial P_l(x).
inline double legendre(int l, double x) {
  double p0 = 1.0, p1 = x;
  if (l == 0) return p0;
  for (int k = 2; k <= l; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// Unit ball plus an even harmonic: 1 + a cos(m theta) on S^1, 1 + a P_m(<z, axis>) on S^2.
/// Convexity is checked by the Body constructor, not assumed.
inline Body harmonic(const GridPtr& grid, double amplitude, int mode, Vec axis = Vec()) {
  if (mode < 0 || mode % 2 != 0) throw DomainError("harmonic mode must be even and non-negative");
  const int d = grid->dim() + 1;
  if (axis.size() == 0) axis = Vec::Unit(d, d - 1);
  if (axis.size() != d || !(axis.norm() > 0)) throw DomainError("bad harmonic axis");
  axis.normalize();
  ScalarField s(grid->size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Vec& z = grid->node(k);
    if (d == 2) {
      const double theta = std::atan2(z(1), z(0)) - std::atan2(axis(1), axis(0));
      s[k] = 1.0 + amplitude * std::cos(mode * theta);
    } else {
      s[k] = 1.0 + amplitude * legendre(mode, z.dot(axis));
    }
  }
  return Body(grid, std::move(s));
}

/// Unit ball with opposite caps cut at height h = 1 - depth along the last axis and the
/// edges rounded. The body is the unit ball of the gauge (|x|^q + (x_last/h)^q)^{1/q}
/// with q = 2 round(1/width), obtained as the polar of the body whose support function
/// is that gauge.
inline Body smoothed_cap(const GridPtr& grid, double depth, double width) {
  if (!(depth > 0 && depth < 1)) throw DomainError("cap depth must lie in (0,1)");
  if (!(width > 0 && width <= 1)) throw DomainError("smoothing width must lie in (0,1]");
  const double h = 1.0 - depth;
  const double q = 2.0 * std::max(1.0, std::round(1.0 / width));
  const int last = grid->dim();
  ScalarField s(grid->size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double t = std::abs(grid->node(k)(last)) / h;
    s[k] = std::pow(1.0 + std::pow(t, q), 1.0 / q);
  }
  return polar(Body(grid, std::move(s)));
}

/// Blend of an l^q norm and the Euclidean norm: s = (1 - c) |z|_q + c.
inline Body lq_ball(const GridPtr& grid, double q, double blend) {
  if (!(q >= 1)) throw DomainError("l^q exponent must be at least 1");
  if (!(blend > 0 && blend <= 1)) throw DomainError("blend must lie in (0,1]");
  ScalarField s(grid->size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    double acc = 0.0;
    for (int i = 0; i < grid->dim() + 1; ++i) acc += std::pow(std::abs(grid->node(k)(i)), q);
    s[k] = (1.0 - blend) * std::pow(acc, 1.0 / q) + blend;
  }
  return Body(grid, std::move(s));
}

}  // namespace caflow::seeds
