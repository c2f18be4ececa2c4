#pragma once

#include "caflow/body.hpp"
#include "caflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace caflow {

enum class Direction { contracting, dual };

inline const char* to_string(Direction d) { return d == Direction::contracting ? "contracting" : "dual"; }

struct FlowParams {
  double p = 3.0;
  int n = 2;
  Direction direction = Direction::contracting;
  double beta = 0.0;      // p / (p + n + 1)
  double alpha = 0.0;     // -1 + 2 (n + 1) p / (p + n + 1)
  double harnack = 0.0;   // n p / ((p + 1)(n + 1))

  static FlowParams make(double p, int n, Direction dir = Direction::contracting) {
    if (!(p > 1.0)) throw DomainError("flow power p must exceed 1");
    if (n != 1 && n != 2) throw DomainError("n must be 1 or 2");
    FlowParams f;
    f.p = p;
    f.n = n;
    f.direction = dir;
    f.beta = p / (p + n + 1);
    f.alpha = -1.0 + 2.0 * (n + 1) * p / (p + n + 1);
    f.harnack = n * p / ((p + 1) * (n + 1));
    return f;
  }
};

struct StepStats {
  long steps = 0;
  double last_dt = 0.0;
  double min_dt = 0.0;
  double max_dt = 0.0;
};

struct FlowState {
  Body body;
  double t = 0.0;
  FlowParams params;
  StepStats stats;
};

/// s (K / s^{n+2})^beta, the contracting normal speed.
inline ScalarField speed(const Body& b, const FlowParams& f) {
  ScalarField v(b.support().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = b.support()[k] * std::pow(b.centro_affine()[k], f.beta);
  return v;
}

/// s* (K* / s*^{n+2})^{-beta}, the expansion speed of the polar flow.
inline ScalarField dual_speed(const Body& b, const FlowParams& f) {
  ScalarField v(b.support().size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = b.support()[k] * std::pow(b.centro_affine()[k], -f.beta);
  return v;
}

/// Contracting speed of the interpolated body at an arbitrary unit vector.
inline double speed_at(const Body& b, const Vec& z, const FlowParams& f) {
  const PointEval e = b.interpolant().evaluate(z);
  const double c = 1.0 / (tangent_determinant(e.radii, z) * std::pow(e.value, b.dim() + 2));
  return e.value * std::pow(c, f.beta);
}

inline ScalarField flow_rate(const Body& b, const FlowParams& f) {
  if (f.direction == Direction::dual) return dual_speed(b, f);
  ScalarField v = speed(b, f);
  for (double& x : v) x = -x;
  return v;
}

/// Largest stable step of the explicit midpoint scheme, scaled by `safety`.
/// Linearizing the speed in the radii matrix gives a diffusion coefficient
/// beta s^a S_n^{b-1} cof(r); the step keeps the fastest mode inside [-2, 0].
inline double cfl_dt(const FlowState& st, double safety) {
  if (!(safety > 0 && safety <= 1)) throw DomainError("CFL safety must lie in (0,1]");
  const Body& b = st.body;
  const FlowParams& f = st.params;
  const int n = b.dim();
  const double sgn = f.direction == Direction::contracting ? 1.0 : -1.0;
  double dmax = 0.0;
  for (std::size_t k = 0; k < b.support().size(); ++k) {
    const double s = b.support()[k];
    const double sn = b.s_n()[k];
    const double cof = n == 1 ? 1.0 : b.radii()[k].eigenvalues(2).second;
    const double D = f.beta * std::pow(s, 1.0 - sgn * (n + 2) * f.beta) * std::pow(sn, -sgn * f.beta - 1.0) * cof;
    dmax = std::max(dmax, D);
  }
  return safety * 2.0 / (b.grid()->operator_radius() * dmax);
}

namespace detail {

inline FlowState midpoint_step(const FlowState& st, double dt) {
  const Body& b = st.body;
  const ScalarField k1 = flow_rate(b, st.params);
  ScalarField mid = b.support();
  for (std::size_t k = 0; k < mid.size(); ++k) mid[k] += 0.5 * dt * k1[k];
  const Body bm(b.grid(), std::move(mid));
  const ScalarField k2 = flow_rate(bm, st.params);
  ScalarField next = b.support();
  for (std::size_t k = 0; k < next.size(); ++k) next[k] += dt * k2[k];
  FlowState out{Body(b.grid(), std::move(next)), st.t + dt, st.params, st.stats};
  out.stats.steps += 1;
  out.stats.last_dt = dt;
  out.stats.min_dt = out.stats.steps == 1 ? dt : std::min(out.stats.min_dt, dt);
  out.stats.max_dt = std::max(out.stats.max_dt, dt);
  return out;
}

}  // namespace detail

/// One explicit midpoint step. Throws StabilityError (state untouched) above the
/// stability bound, ConvexityError carrying a halved step when a stage leaves the
/// class of strictly convex bodies.
inline FlowState step(const FlowState& st, double dt) {
  if (!(dt > 0)) throw DomainError("time step must be positive");
  const double bound = cfl_dt(st, 1.0);
  if (dt > bound) throw StabilityError("time step " + std::to_string(dt) + " exceeds stability bound", bound);
  try {
    return detail::midpoint_step(st, dt);
  } catch (const ConvexityError& e) {
    throw ConvexityError(std::string("step lost convexity: ") + e.what(), e.node(), 0.5 * dt);
  }
}

/// Radius of the contracting ball at time t: [R0^{1+a} - (1+a) t]^{1/(1+a)}.
inline double exact_ball_radius(double R0, double t, const FlowParams& f) {
  const double e = 1.0 + f.alpha;
  const double rest = std::pow(R0, e) - e * t;
  if (!(rest > 0)) throw DomainError("time is at or past extinction of the ball");
  return std::pow(rest, 1.0 / e);
}

inline double ball_extinction_time(double R0, const FlowParams& f) {
  return std::pow(R0, 1.0 + f.alpha) / (1.0 + f.alpha);
}

struct TerminalEstimate {
  double T_lo = 0.0;
  double T_hi = 0.0;
  std::string method;
};

/// Containment bracket for the extinction time from in/circumradius. Extra frames
/// (SL images of the body, which share its extinction time) tighten the bracket.
inline TerminalEstimate terminal_estimate(const FlowState& st, std::span<const Body* const> frames = {}) {
  const double e = 1.0 + st.params.alpha;
  auto bracket = [&](const Body& b) {
    const auto [rm, rp] = radii_bounds(b);
    return std::pair{st.t + std::pow(rm, e) / e, st.t + std::pow(rp, e) / e};
  };
  auto [lo, hi] = bracket(st.body);
  TerminalEstimate out{lo, hi, "containment:identity"};
  for (const Body* b : frames) {
    const auto [l, h] = bracket(*b);
    if (l > out.T_lo || h < out.T_hi) out.method = "containment:intersected";
    out.T_lo = std::max(out.T_lo, l);
    out.T_hi = std::min(out.T_hi, h);
  }
  if (out.T_lo > out.T_hi) std::swap(out.T_lo, out.T_hi);
  return out;
}

/// Extinction time from two volume samples: V^{(1+a)/(n+1)} is affine in t along
/// ellipsoidal solutions, so the root of the secant through them estimates T.
inline std::optional<double> extinction_from_volume(double t1, double V1, double t2, double V2,
                                                    const FlowParams& f) {
  const double q = (1.0 + f.alpha) / (f.n + 1);
  const double y1 = std::pow(V1, q), y2 = std::pow(V2, q);
  if (!(t2 > t1) || !(y2 < y1)) return std::nullopt;
  return t2 + y2 * (t2 - t1) / (y1 - y2);
}

/// The body scaled by ((1+a)(T-t))^{-1/(1+a)}.
inline Body rescaled_body(const FlowState& st, double T) {
  if (!(T > st.t)) throw DomainError("rescaling needs T > t");
  const double e = 1.0 + st.params.alpha;
  return scaled(st.body, std::pow(e * (T - st.t), -1.0 / e));
}

/// Refined minimum of the contracting speed over the sphere.
inline double min_speed(const Body& b, const FlowParams& f) {
  const ScalarField v = speed(b, f);
  return refined_extremes(*b.grid(), v, [&](const Vec& z) { return speed_at(b, z, f); }).min;
}

/// t^{np/((p+1)(n+1))} times the minimal speed; 0 at t = 0.
inline double harnack_quantity(const FlowState& st, std::optional<double> speed_min = std::nullopt) {
  if (st.t <= 0.0) return 0.0;
  const double m = speed_min ? *speed_min : min_speed(st.body, st.params);
  return m * std::pow(st.t, st.params.harnack);
}

/// (1 - e)(s(t) - s(t0)) + (t - t0) speed(t), e the Harnack exponent.
inline ScalarField displacement_monitor(const FlowState& s0, const FlowState& s1) {
  if (!s0.body.grid()->same_layout(*s1.body.grid())) throw DomainError("displacement monitor needs matching grids");
  if (!(s1.t >= s0.t)) throw DomainError("displacement monitor needs t >= t0");
  const double e = s1.params.harnack;
  const ScalarField v = speed(s1.body, s1.params);
  ScalarField out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    out[k] = (1.0 - e) * (s1.body.support()[k] - s0.body.support()[k]) + (s1.t - s0.t) * v[k];
  return out;
}

}  // namespace caflow
