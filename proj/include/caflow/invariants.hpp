#pragma once

#include "caflow/affine.hpp"
#include "caflow/body.hpp"
#include "caflow/flow.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace caflow {

/// Omega_p = int s S_n (K / s^{n+2})^{p/(n+1+p)}.
inline double p_affine_surface_area(const Body& b, double p) {
  if (!(p > 1)) throw DomainError("p must exceed 1");
  const double beta = p / (b.dim() + 1 + p);
  const auto& w = b.grid()->weights();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k)
    acc += w[k] * b.support()[k] * b.s_n()[k] * std::pow(b.centro_affine()[k], beta);
  return acc;
}

/// Omega_p^{n+p+1} / V^{n+1-p}.
inline double iso_ratio(double omega, double V, int n, double p) {
  return std::pow(omega, n + p + 1) / std::pow(V, n + 1 - p);
}

inline double iso_ratio(const Body& b, double p) {
  return iso_ratio(p_affine_surface_area(b, p), volume(b), b.dim(), p);
}

/// (n+1)^{n+p+1} omega^{2p}, attained by centered ellipsoids.
inline double iso_ceiling(int n, double p) {
  return std::pow(n + 1.0, n + p + 1) * std::pow(unit_ball_volume(n), 2 * p);
}

inline double mahler_ceiling(int n) { return std::pow(unit_ball_volume(n), 2); }

struct InvariantRecord {
  double t = 0;
  double V = 0;
  double V_star = 0;
  double mahler = 0;
  double omega_p = 0;
  double iso_ratio = 0;
  double cac_min = 0;
  double cac_max = 0;
  double speed_min = 0;
  double harnack = 0;
  double r_minus = 0;
  double r_plus = 0;
  double bm_upper = 0;
};

/// Column order of the time-series table.
inline constexpr std::array<const char*, 13> kRecordColumns{
    "t",       "V",        "V_star",  "mahler", "omega_p", "iso_ratio", "cac_min",
    "cac_max", "speed_min", "harnack", "r_minus", "r_plus", "bm_upper"};

inline constexpr std::array<double InvariantRecord::*, 13> kRecordMembers{
    &InvariantRecord::t,         &InvariantRecord::V,       &InvariantRecord::V_star,  &InvariantRecord::mahler,
    &InvariantRecord::omega_p,   &InvariantRecord::iso_ratio, &InvariantRecord::cac_min, &InvariantRecord::cac_max,
    &InvariantRecord::speed_min, &InvariantRecord::harnack, &InvariantRecord::r_minus, &InvariantRecord::r_plus,
    &InvariantRecord::bm_upper};

inline double record_field(const InvariantRecord& r, const std::string& name) {
  for (std::size_t i = 0; i < kRecordColumns.size(); ++i)
    if (name == kRecordColumns[i]) return r.*kRecordMembers[i];
  throw DomainError("unknown record field: " + name);
}

/// Every record quantity for the state. `normalized` is the body in its SL frame;
/// `V_star` may be passed when the polar volume is already known.
inline InvariantRecord record(const FlowState& st, const Body& normalized, double V_star = -1.0) {
  const Body& b = st.body;
  InvariantRecord r;
  r.t = st.t;
  r.V = volume(b);
  r.V_star = V_star > 0 ? V_star : volume(polar(b));
  r.mahler = r.V * r.V_star;
  r.omega_p = p_affine_surface_area(b, st.params.p);
  r.iso_ratio = iso_ratio(r.omega_p, r.V, b.dim(), st.params.p);
  const Extremes c = centro_affine_extremes(b);
  r.cac_min = c.min;
  r.cac_max = c.max;
  r.speed_min = min_speed(b, st.params);
  r.harnack = harnack_quantity(st, r.speed_min);
  const auto [rm, rp] = radii_bounds(normalized);
  r.r_minus = rm;
  r.r_plus = rp;
  r.bm_upper = std::log(rp / rm);
  return r;
}

struct MonotonicityReport {
  std::string field;
  double worst = 0.0;       // most negative relative per-step change (0 if none)
  long worst_index = -1;    // index of the later record of the worst step
  double total = 0.0;       // relative change first -> last
  double slack = 0.0;
  bool pass = true;
};

/// Audits that `field` is non-decreasing: every relative step change must be >= -slack.
inline MonotonicityReport audit_monotone(const std::vector<InvariantRecord>& series, const std::string& field,
                                         double slack) {
  if (series.empty()) throw DomainError("cannot audit an empty series");
  MonotonicityReport rep;
  rep.field = field;
  rep.slack = slack;
  auto rel = [](double a, double b) {
    const double den = std::max(std::abs(a), std::abs(b));
    return den > 0 ? (b - a) / den : 0.0;
  };
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double c = rel(record_field(series[i - 1], field), record_field(series[i], field));
    if (c < rep.worst) {
      rep.worst = c;
      rep.worst_index = static_cast<long>(i);
    }
  }
  rep.total = rel(record_field(series.front(), field), record_field(series.back(), field));
  rep.pass = rep.worst >= -slack;
  return rep;
}

struct CeilingReport {
  std::string field;
  double ceiling = 0.0;
  double worst_excess = -std::numeric_limits<double>::infinity();  // max of value/ceiling - 1
  double slack = 0.0;
  bool pass = true;
};

inline CeilingReport audit_ceiling(const std::vector<InvariantRecord>& series, const std::string& field,
                                   double ceiling, double slack) {
  if (series.empty()) throw DomainError("cannot audit an empty series");
  CeilingReport rep{field, ceiling, -std::numeric_limits<double>::infinity(), slack, true};
  for (const auto& r : series) rep.worst_excess = std::max(rep.worst_excess, record_field(r, field) / ceiling - 1.0);
  rep.pass = rep.worst_excess <= slack;
  return rep;
}

}  // namespace caflow
