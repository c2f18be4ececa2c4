#pragma once

#include "caflow/affine.hpp"
#include "caflow/flow.hpp"
#include "caflow/invariants.hpp"
#include "caflow/io.hpp"
#include "caflow/seeds.hpp"

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

namespace caflow {

/// ball:R | ellipsoid:a,b[,c] | harmonic:amp,mode | cap:depth,width | file:path
struct SeedSpec {
  enum class Kind { ball, ellipsoid, harmonic, cap, file };
  Kind kind = Kind::ball;
  std::vector<double> args;
  std::string path;
  std::string text;

  static SeedSpec parse(const std::string& text) {
    SeedSpec s;
    s.text = text;
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "file") {
      if (rest.empty()) throw DomainError("seed 'file' needs a path");
      s.kind = Kind::file;
      s.path = rest;
      return s;
    }
    std::stringstream ss(rest);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      try {
        s.args.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) throw DomainError("seed '" + text + "': bad number '" + cell + "'");
    }
    auto want = [&](std::size_t lo, std::size_t hi) {
      if (s.args.size() < lo || s.args.size() > hi) throw DomainError("seed '" + text + "': wrong parameter count");
    };
    if (kind == "ball") {
      s.kind = Kind::ball;
      if (s.args.empty()) s.args.push_back(1.0);
      want(1, 1);
    } else if (kind == "ellipsoid") {
      s.kind = Kind::ellipsoid;
      want(2, 3);
    } else if (kind == "harmonic") {
      s.kind = Kind::harmonic;
      want(2, 2);
    } else if (kind == "cap") {
      s.kind = Kind::cap;
      want(2, 2);
    } else {
      throw DomainError("unknown seed kind '" + kind + "'");
    }
    return s;
  }

  /// `rng_seed` != 0 draws a random axis for the harmonic seed.
  Body build(const GridPtr& grid, std::uint64_t rng_seed = 0) const {
    switch (kind) {
      case Kind::ball:
        if (!(args[0] > 0)) throw DomainError("ball radius must be positive");
        return seeds::ball(grid, args[0]);
      case Kind::ellipsoid:
        if (static_cast<int>(args.size()) != grid->dim() + 1) throw DomainError("ellipsoid needs n+1 semi-axes");
        return seeds::ellipsoid(grid, args);
      case Kind::harmonic: {
        Vec axis;
        if (rng_seed != 0) {
          std::mt19937_64 rng(rng_seed);
          std::normal_distribution<double> g;
          axis = Vec(grid->dim() + 1);
          for (int i = 0; i < axis.size(); ++i) axis(i) = g(rng);
        }
        return seeds::harmonic(grid, args[0], static_cast<int>(std::lround(args[1])), axis);
      }
      case Kind::cap:
        return seeds::smoothed_cap(grid, args[0], args[1]);
      case Kind::file:
        return load_body(path);
    }
    throw DomainError("unreachable seed kind");
  }
};

struct RunConfig {
  int n = 2;
  double p = 3.0;
  int resolution = 32;
  std::string seed = "harmonic:0.05,4";
  double horizon = 0.0;       // stop at this fraction of the initial T estimate; 0 runs to the halt rule
  long max_steps = 0;         // 0: no cap
  double safety = 0.5;
  double dt = 0.0;            // fixed step when positive (still checked against the stability bound)
  int record_every = 1;
  int normalize_every = 1;    // in records
  int snapshot_every = 0;     // in steps; 0 disables snapshots
  double eps = 1e-6;
  double gamma = 1.0;
  std::string output_dir;     // empty: no artifacts
  std::uint64_t rng_seed = 0;
  double slack = -1.0;        // negative: calibrate on a ball run
  int calibration_steps = 40;

  void validate() const {
    if (n != 1 && n != 2) throw DomainError("n must be 1 or 2");
    if (!(p > 1)) throw DomainError("p must exceed 1");
    if (resolution < (n == 1 ? 8 : 4) || resolution > 4096) throw DomainError("resolution out of range");
    if (!(horizon >= 0 && horizon < 1)) throw DomainError("horizon must lie in [0,1)");
    if (max_steps < 0) throw DomainError("max steps must be non-negative");
    if (!(safety > 0 && safety <= 1)) throw DomainError("safety must lie in (0,1]");
    if (!(dt >= 0)) throw DomainError("dt must be non-negative");
    if (record_every < 1 || normalize_every < 1) throw DomainError("cadences must be positive");
    if (snapshot_every < 0) throw DomainError("snapshot cadence must be non-negative");
    if (!(eps > 0 && eps < 1)) throw DomainError("eps must lie in (0,1)");
    if (!(gamma > 0)) throw DomainError("gamma must be positive");
    if (!(slack < 1e-3)) throw DomainError("slack must be below 1e-3");
    if (calibration_steps < 2) throw DomainError("calibration needs at least 2 steps");
  }
};

inline json to_json(const RunConfig& c) {
  return json{{"n", c.n},
              {"p", c.p},
              {"resolution", c.resolution},
              {"seed", c.seed},
              {"horizon", c.horizon},
              {"max_steps", c.max_steps},
              {"safety", c.safety},
              {"dt", c.dt},
              {"record_every", c.record_every},
              {"normalize_every", c.normalize_every},
              {"snapshot_every", c.snapshot_every},
              {"eps", c.eps},
              {"gamma", c.gamma},
              {"output_dir", c.output_dir},
              {"rng_seed", c.rng_seed},
              {"slack", c.slack},
              {"calibration_steps", c.calibration_steps}};
}

/// Output directory: explicit value, else $CAFLOW_OUTPUT_DIR, else ./caflow_out.
inline std::string default_output_dir() {
  const char* e = std::getenv("CAFLOW_OUTPUT_DIR");
  return e && *e ? e : "caflow_out";
}

/// Writes snapshots off the stepping thread. The queue is bounded; push blocks when full.
class SnapshotWriter {
 public:
  explicit SnapshotWriter(std::size_t capacity = 4) : cap_(capacity), worker_([this] { loop(); }) {}
  SnapshotWriter(const SnapshotWriter&) = delete;
  SnapshotWriter& operator=(const SnapshotWriter&) = delete;
  ~SnapshotWriter() {
    try {
      close();
    } catch (...) {
    }
  }

  void push(std::string path, FlowState st) {
    std::unique_lock lk(m_);
    not_full_.wait(lk, [&] { return q_.size() < cap_ || done_; });
    if (done_) throw Error("snapshot writer is closed");
    q_.emplace_back(std::move(path), std::move(st));
    not_empty_.notify_one();
  }

  /// Drains the queue and rethrows the first write error.
  void close() {
    {
      std::lock_guard lk(m_);
      if (done_ && !worker_.joinable()) return;
      done_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
    if (worker_.joinable()) worker_.join();
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

  std::size_t written() const { return written_; }

 private:
  void loop() {
    for (;;) {
      std::optional<std::pair<std::string, FlowState>> job;
      {
        std::unique_lock lk(m_);
        not_empty_.wait(lk, [&] { return !q_.empty() || done_; });
        if (q_.empty()) return;
        job.emplace(std::move(q_.front()));
        q_.pop_front();
        not_full_.notify_one();
      }
      try {
        save_state(job->first, job->second);
        ++written_;
      } catch (...) {
        std::lock_guard lk(m_);
        if (!error_) error_ = std::current_exception();
      }
    }
  }

  std::size_t cap_;
  std::mutex m_;
  std::condition_variable not_full_, not_empty_;
  std::deque<std::pair<std::string, FlowState>> q_;
  bool done_ = false;
  std::exception_ptr error_;
  std::size_t written_ = 0;
  std::thread worker_;
};

/// Per-field noise measured on a ball run at the run's grid, p and step policy.
struct SlackCalibration {
  double noise = 0.0;
  double slack = 0.0;
  int steps = 0;
  double ceiling_noise = 0.0;  // quadrature error of the ceilings on the seed's ellipsoid
  double ceiling_slack = 0.0;
};

/// Mahler volume and the isoperimetric ratio are constant along the ball solution and
/// the minimal speed equals (mean s)^{-alpha}; the largest deviation over the run is
/// the noise. Slack is 100 times the noise, clamped to [1e-10, 1e-6].
inline SlackCalibration calibrate_slack(const GridPtr& grid, const FlowParams& f, double safety, int steps) {
  FlowState st{seeds::ball(grid), 0.0, f, {}};
  auto rel = [](double a, double b) { return std::abs(b - a) / std::max(std::abs(a), std::abs(b)); };
  SlackCalibration c;
  std::optional<InvariantRecord> prev;
  for (int i = 0; i <= steps; ++i) {
    InvariantRecord r = record(st, st.body);
    double mean = 0.0;
    for (double v : st.body.support()) mean += v;
    mean /= static_cast<double>(st.body.support().size());
    c.noise = std::max(c.noise, rel(std::pow(mean, -f.alpha), r.speed_min));
    if (prev) c.noise = std::max({c.noise, rel(prev->mahler, r.mahler), rel(prev->iso_ratio, r.iso_ratio)});
    prev = r;
    if (i < steps) st = step(st, cfl_dt(st, safety));
  }
  c.steps = steps;
  c.slack = std::clamp(100.0 * c.noise, 1e-10, 1e-6);
  return c;
}

/// The ceilings are attained by ellipsoids, so their quadrature error is measured on
/// the ellipsoid A^{-1} B, A the seed's normalizing frame. Slack is 10 times that error,
/// and never below the monotone slack.
inline void calibrate_ceiling(SlackCalibration& c, const Body& seed, const Mat& frame, double p) {
  const Body e = linear_image(seeds::ball(seed.grid()), frame.inverse());
  const int n = seed.dim();
  const double m = volume(e) * volume(polar(e)) / mahler_ceiling(n);
  const double q = iso_ratio(e, p) / iso_ceiling(n, p);
  c.ceiling_noise = std::max(std::abs(m - 1.0), std::abs(q - 1.0));
  c.ceiling_slack = std::max(c.slack, 10.0 * c.ceiling_noise);
}

struct DisplacementReport {
  double worst = std::numeric_limits<double>::infinity();  // min over audited pairs of min_z Q / max s(t0)
  double worst_t0 = 0.0, worst_t = 0.0;
  double slack = 0.0;
  bool pass = true;
};

struct StabilityReport {
  std::string status;       // conditional | informational | not_applicable
  bool seed_pinched = false;
  double bound = 0.0;       // log delta
  double worst = 0.0;       // max bm_upper over records
  bool pass = true;
};

struct AuditSummary {
  double slack = 0.0;
  double ceiling_slack = 0.0;
  std::vector<MonotonicityReport> monotone;
  std::vector<CeilingReport> ceilings;
  DisplacementReport displacement;
  StabilityReport stability;
  bool strict_required = false;   // seed is not an ellipsoid: totals must increase
  bool strict_pass = true;
  bool pass = true;
};

struct RunResult {
  FlowState initial;
  FlowState final_state;
  std::vector<InvariantRecord> series;
  std::optional<FlowState> last_recorded;   // last pre-halt state that was recorded
  Mat last_frame;                           // SL frame of the last record
  std::string halt;
  std::string failure;                      // nonempty when the run ended on an error
  double T = 0.0;                           // extinction-time estimate
  TerminalEstimate bracket;
  std::string T_method;
  SlackCalibration calibration;
  AuditSummary audit;
  double delta = 0.0;
  bool admissible = false;
  double seed_mahler_ratio = 0.0;
  bool seed_pinched = false;
  long snapshots = 0;
};

/// Audits a recorded series. `seed_mahler_ratio` = V V* / omega^2 of the first body.
inline AuditSummary audit_series(const std::vector<InvariantRecord>& s, int n, double p, double slack,
                                 double ceiling_slack, double seed_mahler_ratio) {
  AuditSummary a;
  a.slack = slack;
  a.ceiling_slack = ceiling_slack;
  for (const char* f : {"mahler", "iso_ratio", "speed_min", "harnack"}) {
    auto rep = audit_monotone(s, f, slack);
    a.pass = a.pass && rep.pass;
    a.monotone.push_back(rep);
  }
  a.ceilings.push_back(audit_ceiling(s, "mahler", mahler_ceiling(n), ceiling_slack));
  a.ceilings.push_back(audit_ceiling(s, "iso_ratio", iso_ceiling(n, p), ceiling_slack));
  for (const auto& c : a.ceilings) a.pass = a.pass && c.pass;
  a.strict_required = 1.0 - seed_mahler_ratio > 1e3 * ceiling_slack;
  if (a.strict_required && s.size() > 1)
    a.strict_pass = a.monotone[0].total > slack && a.monotone[1].total > slack;
  a.pass = a.pass && a.strict_pass;
  return a;
}

inline json to_json(const AuditSummary& a) {
  json j;
  j["slack"] = a.slack;
  j["ceiling_slack"] = a.ceiling_slack;
  for (const auto& m : a.monotone)
    j["monotone"].push_back({{"field", m.field},
                             {"worst", m.worst},
                             {"worst_index", m.worst_index},
                             {"total", m.total},
                             {"slack", m.slack},
                             {"pass", m.pass}});
  for (const auto& c : a.ceilings)
    j["ceilings"].push_back({{"field", c.field},
                             {"ceiling", c.ceiling},
                             {"worst_excess", c.worst_excess},
                             {"slack", c.slack},
                             {"pass", c.pass}});
  j["strict_increase"] = {{"required", a.strict_required}, {"pass", a.strict_pass}};
  j["displacement"] = {{"worst", a.displacement.worst},
                       {"worst_t0", a.displacement.worst_t0},
                       {"worst_t", a.displacement.worst_t},
                       {"slack", a.displacement.slack},
                       {"pass", a.displacement.pass}};
  j["stability"] = {{"status", a.stability.status},
                    {"seed_pinched", a.stability.seed_pinched},
                    {"bound", a.stability.bound},
                    {"worst", a.stability.worst},
                    {"pass", a.stability.pass},
                    {"counts_toward_overall", false}};
  j["pass"] = a.pass;
  return j;
}

namespace detail {

inline void update_displacement(DisplacementReport& d, const FlowState& s0, const FlowState& s1) {
  const ScalarField q = displacement_monitor(s0, s1);
  const double scale = *std::max_element(s0.body.support().begin(), s0.body.support().end());
  const double m = *std::min_element(q.begin(), q.end()) / scale;
  if (m < d.worst) {
    d.worst = m;
    d.worst_t0 = s0.t;
    d.worst_t = s1.t;
  }
}

inline json metadata(const RunConfig& cfg, const RunResult& r, const GridPtr& grid) {
  const FlowParams f = r.initial.params;
  json j;
  j["schema"] = "caflow.metadata";
  j["version"] = 1;
  j["config"] = to_json(cfg);
  j["grid"] = grid->descriptor();
  j["derived"] = {{"alpha", f.alpha},
                  {"beta", f.beta},
                  {"harnack_exponent", f.harnack},
                  {"delta", r.delta},
                  {"delta_pow_1_plus_alpha", std::pow(r.delta, 1.0 + f.alpha)},
                  {"pinching_admissible", r.admissible},
                  {"max_admissible_eps", max_admissible_epsilon(cfg.gamma, f.n, f.alpha)},
                  {"seed_mahler_ratio", r.seed_mahler_ratio},
                  {"seed_pinched", r.seed_pinched},
                  {"seed_canonicalization",
                   {{"symmetry", r.initial.body.canonicalization().symmetry},
                    {"band_limit", r.initial.body.canonicalization().band_limit}}}};
  j["estimators"] = {
      {"time_step", cfg.dt > 0 ? "fixed dt, checked against the stability bound"
                               : "safety times the midpoint-rule stability bound, recomputed every step"},
      {"halt", "min s < 1e-3 initial min s, or dt < 1e-12, or horizon, or step cap"},
      {"extinction_time", "secant of V^{(1+alpha)/(n+1)} through the last two records, clamped to the containment bracket"},
      {"containment_bracket", "in/circumradius of the body and of its SL-normalized image, intersected"},
      {"normalization", "minimum-volume enclosing ellipsoid of boundary samples (log-barrier Newton, tol 1e-7); identity kept if better"},
      {"extremes", "best four nodes polished by Newton in a tangent chart"},
      {"polar", "node scan then damped Newton on the interpolant"},
      {"slack", cfg.slack >= 0 ? "fixed by config" : "100 x ball-run noise, clamped to [1e-10, 1e-6]"},
      {"ceiling_slack", "10 x quadrature error of both ceilings on the ellipsoid of the seed's normalizing frame, at least the slack"},
      {"displacement", "audited at every record against the initial state and the previous record"},
      {"stability_audit", "conditional on gamma; informational when delta^{1+alpha} >= 1.5; excluded from overall pass"},
      {"record_cadence", cfg.record_every},
      {"normalize_cadence", cfg.normalize_every}};
  j["calibration"] = {{"noise", r.calibration.noise},
                      {"slack", r.calibration.slack},
                      {"steps", r.calibration.steps},
                      {"ceiling_noise", r.calibration.ceiling_noise},
                      {"ceiling_slack", r.calibration.ceiling_slack}};
  j["schemas"] = {{"snapshot", std::string(kSnapshotSchema) + " v" + std::to_string(kSnapshotVersion)},
                  {"series", std::string(kSeriesSchema) + " v" + std::to_string(kSeriesVersion)}};
  if (!r.halt.empty()) {
    j["result"] = {{"halt", r.halt},
                   {"steps", r.final_state.stats.steps},
                   {"t_final", r.final_state.t},
                   {"records", r.series.size()},
                   {"snapshots", r.snapshots},
                   {"T", r.T},
                   {"T_method", r.T_method},
                   {"T_bracket", {r.bracket.T_lo, r.bracket.T_hi}},
                   {"min_dt", r.final_state.stats.min_dt},
                   {"max_dt", r.final_state.stats.max_dt}};
    if (!r.failure.empty()) j["result"]["failure"] = r.failure;
  }
  return j;
}

}  // namespace detail

/// Runs the contracting flow from the configured seed. With an output directory the run
/// writes metadata.json, series.csv, snapshots/ and audit.json there; a run that ends on
/// an error leaves its partial artifacts plus a FAILED marker.
inline RunResult run(const RunConfig& cfg) {
  cfg.validate();
  const GridPtr grid = build_grid(cfg.n, cfg.resolution);
  Body seed = SeedSpec::parse(cfg.seed).build(grid, cfg.rng_seed);
  if (seed.dim() != cfg.n) throw DomainError("seed body dimension does not match n");
  const FlowParams f = FlowParams::make(cfg.p, cfg.n);

  RunResult r{FlowState{seed, 0.0, f, {}}, FlowState{seed, 0.0, f, {}}, {}, {}, Mat(), "", "", 0.0, {}, "", {}, {},
              0.0, false, 0.0, false, 0};
  const GridPtr g = seed.grid();
  r.delta = pinching_delta(cfg.eps, cfg.gamma, cfg.n);
  r.admissible = std::pow(r.delta, 1.0 + f.alpha) < 1.5;
  const double w2 = mahler_ceiling(cfg.n);
  r.seed_mahler_ratio = volume(seed) * volume(polar(seed)) / w2;
  r.seed_pinched = mahler_pinched(r.seed_mahler_ratio * w2, cfg.eps, cfg.n);
  const double step_safety = cfg.dt > 0 ? 0.5 : cfg.safety;
  if (cfg.slack >= 0) {
    r.calibration = {0.0, cfg.slack, 0};
  } else {
    r.calibration = calibrate_slack(g, f, step_safety, cfg.calibration_steps);
  }
  calibrate_ceiling(r.calibration, seed, normalize_sl(seed).frame.A, cfg.p);
  const double slack = r.calibration.slack;

  namespace fs = std::filesystem;
  const bool write = !cfg.output_dir.empty();
  const fs::path out(cfg.output_dir);
  std::optional<SnapshotWriter> writer;
  if (write) {
    fs::create_directories(out);
    fs::remove(out / "FAILED");
    if (cfg.snapshot_every > 0) {
      fs::create_directories(out / "snapshots");
      writer.emplace(4);
    }
    detail::write_file((out / "metadata.json").string(), detail::metadata(cfg, r, g).dump(2) + "\n");
  }

  FlowState st = r.initial;
  const double s0min = *std::min_element(seed.support().begin(), seed.support().end());
  Mat frame = Mat::Identity(cfg.n + 1, cfg.n + 1);
  double t_stop = std::numeric_limits<double>::infinity();
  if (cfg.horizon > 0) {
    const Normalized nb = normalize_sl(seed);
    const Body* frames[] = {&nb.body};
    const TerminalEstimate e = terminal_estimate(st, frames);
    t_stop = cfg.horizon * 0.5 * (e.T_lo + e.T_hi);
  }

  std::optional<FlowState> prev_rec;
  long n_records = 0;
  auto take_record = [&] {
    if (n_records % cfg.normalize_every == 0) frame = normalize_sl(st.body).frame.A;
    const Body nb = frame.isIdentity(0.0) ? st.body : linear_image(st.body, frame);
    r.series.push_back(record(st, nb));
    if (st.t > 0) {
      detail::update_displacement(r.audit.displacement, r.initial, st);
      if (prev_rec && prev_rec->t > 0) detail::update_displacement(r.audit.displacement, *prev_rec, st);
    }
    prev_rec = st;
    r.last_recorded = st;
    r.last_frame = frame;
    ++n_records;
  };
  auto snapshot = [&] {
    if (!writer) return;
    char name[64];
    std::snprintf(name, sizeof name, "snap_%08ld.json", st.stats.steps);
    writer->push((out / "snapshots" / name).string(), st);
    ++r.snapshots;
  };

  try {
    take_record();
    snapshot();
    for (;;) {
      if (*std::min_element(st.body.support().begin(), st.body.support().end()) < 1e-3 * s0min) {
        r.halt = "min_support";
        break;
      }
      if (st.t >= t_stop * (1 - 1e-14)) {
        r.halt = "horizon";
        break;
      }
      if (cfg.max_steps > 0 && st.stats.steps >= cfg.max_steps) {
        r.halt = "step_cap";
        break;
      }
      double dt = cfg.dt > 0 ? cfg.dt : cfl_dt(st, cfg.safety);
      if (dt < 1e-12) {
        r.halt = "dt_underflow";
        break;
      }
      if (st.t + dt > t_stop) dt = t_stop - st.t;
      for (int attempt = 0;; ++attempt) {
        try {
          st = step(st, dt);
          break;
        } catch (const ConvexityError& e) {
          if (attempt >= 3 || e.suggested_dt() < 1e-12) throw;
          dt = e.suggested_dt();
        }
      }
      const bool last = st.t >= t_stop * (1 - 1e-14) || (cfg.max_steps > 0 && st.stats.steps >= cfg.max_steps);
      if (st.stats.steps % cfg.record_every == 0 || last) take_record();
      if (cfg.snapshot_every > 0 && st.stats.steps % cfg.snapshot_every == 0) snapshot();
    }
  } catch (const Error& e) {
    r.failure = e.what();
    r.halt = "error";
  }
  r.final_state = st;
  if (writer) {
    try {
      writer->close();
    } catch (const std::exception& e) {
      if (r.failure.empty()) r.failure = std::string("snapshot writer: ") + e.what();
    }
  }

  // Extinction time: volume secant on the last two records, kept inside the bracket.
  if (r.last_recorded) {
    const FlowState& lr = *r.last_recorded;
    const Body nb = linear_image(lr.body, r.last_frame);
    const Body* frames[] = {&nb};
    r.bracket = terminal_estimate(lr, frames);
    std::optional<double> T;
    if (r.series.size() >= 2) {
      const auto& a = r.series[r.series.size() - 2];
      const auto& b = r.series.back();
      T = extinction_from_volume(a.t, a.V, b.t, b.V, f);
    }
    if (T) {
      r.T = std::clamp(*T, r.bracket.T_lo, r.bracket.T_hi);
      r.T_method = *T == r.T ? "volume_secant" : "volume_secant_clamped";
    } else {
      r.T = 0.5 * (r.bracket.T_lo + r.bracket.T_hi);
      r.T_method = "bracket_midpoint";
    }
  }

  if (!std::isfinite(r.audit.displacement.worst)) r.audit.displacement.worst = 0.0;
  r.audit.displacement.slack = slack;
  r.audit.displacement.pass = r.audit.displacement.worst >= -slack;
  if (!r.series.empty()) {
    const DisplacementReport d = r.audit.displacement;
    r.audit = audit_series(r.series, cfg.n, cfg.p, slack, r.calibration.ceiling_slack, r.seed_mahler_ratio);
    r.audit.displacement = d;
    r.audit.pass = r.audit.pass && d.pass;
  } else {
    r.audit.pass = false;
  }
  StabilityReport& sr = r.audit.stability;
  sr.seed_pinched = r.seed_pinched;
  sr.bound = std::log(r.delta);
  for (const auto& rec : r.series) sr.worst = std::max(sr.worst, rec.bm_upper);
  sr.pass = sr.worst <= sr.bound;
  sr.status = !r.seed_pinched ? "not_applicable" : (r.admissible ? "conditional" : "informational");
  if (!r.failure.empty()) r.audit.pass = false;

  if (write) {
    save_series((out / "series.csv").string(), r.series);
    json a = to_json(r.audit);
    a["status"] = r.failure.empty() ? "completed" : "failed";
    if (!r.failure.empty()) a["failure"] = r.failure;
    detail::write_file((out / "audit.json").string(), a.dump(2) + "\n");
    detail::write_file((out / "metadata.json").string(), detail::metadata(cfg, r, g).dump(2) + "\n");
    if (!r.failure.empty()) detail::write_file((out / "FAILED").string(), r.failure + "\n");
  }
  return r;
}

}  // namespace caflow
