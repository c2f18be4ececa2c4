#include "caflow/run.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace caflow;

namespace {

json invariants_json(const Body& b, double p) {
  const FlowState st{b, 0.0, FlowParams::make(p, b.dim()), {}};
  const Normalized nb = normalize_sl(b);
  const InvariantRecord r = record(st, nb.body);
  json j;
  for (std::size_t i = 0; i < kRecordColumns.size(); ++i) j[kRecordColumns[i]] = r.*kRecordMembers[i];
  j.erase("t");
  j.erase("harnack");
  j["grid"] = b.grid()->descriptor();
  j["mahler_ratio"] = r.mahler / mahler_ceiling(b.dim());
  j["iso_ratio_over_ceiling"] = r.iso_ratio / iso_ceiling(b.dim(), p);
  j["lowner_frame"] = nb.frame.lowner;
  return j;
}

int audit_command(const std::string& dir, double slack_override) {
  namespace fs = std::filesystem;
  const auto series = load_series((fs::path(dir) / "series.csv").string());
  json meta = json::parse(detail::read_file((fs::path(dir) / "metadata.json").string()));
  const int n = meta.at("config").at("n").get<int>();
  const double p = meta.at("config").at("p").get<double>();
  const double slack = slack_override >= 0 ? slack_override : meta.at("calibration").at("slack").get<double>();
  const double ceiling_slack = std::max(slack, meta.at("calibration").at("ceiling_slack").get<double>());
  const double seed_ratio = meta.at("derived").at("seed_mahler_ratio").get<double>();
  const AuditSummary a = audit_series(series, n, p, slack, ceiling_slack, seed_ratio);
  json out = to_json(a);
  out.erase("displacement");
  out.erase("stability");
  std::cout << out.dump(2) << "\n";
  return a.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the p centro-affine normal flow of convex bodies"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto* run_cmd = app.add_subcommand("run", "evolve a seed body and audit the monotone quantities");
  run_cmd->add_option("--n", cfg.n, "sphere dimension (1 or 2)")->check(CLI::IsMember({1, 2}));
  run_cmd->add_option("--p", cfg.p, "flow power, > 1");
  run_cmd->add_option("--resolution", cfg.resolution, "nodes on S^1, or latitudes on S^2");
  run_cmd->add_option("--seed", cfg.seed, "ball:R | ellipsoid:a,b[,c] | harmonic:amp,mode | cap:depth,width | file:path");
  run_cmd->add_option("--horizon", cfg.horizon, "stop at this fraction of the estimated extinction time (0: halt rule)");
  run_cmd->add_option("--max-steps", cfg.max_steps, "step cap (0: none)");
  run_cmd->add_option("--safety", cfg.safety, "fraction of the stability bound");
  run_cmd->add_option("--dt", cfg.dt, "fixed time step (0: adaptive)");
  run_cmd->add_option("--record-every", cfg.record_every, "steps between records");
  run_cmd->add_option("--normalize-every", cfg.normalize_every, "records between SL renormalizations");
  run_cmd->add_option("--snapshot-every", cfg.snapshot_every, "steps between snapshots (0: none)");
  run_cmd->add_option("--eps", cfg.eps, "Mahler pinching parameter");
  run_cmd->add_option("--gamma", cfg.gamma, "stability constant for the conditional audit");
  run_cmd->add_option("--out", cfg.output_dir, "output directory (default $CAFLOW_OUTPUT_DIR or ./caflow_out)");
  run_cmd->add_option("--rng-seed", cfg.rng_seed, "nonzero: random axis for the harmonic seed");
  run_cmd->add_option("--slack", cfg.slack, "audit slack (negative: calibrate on a ball run)");
  run_cmd->add_option("--calibration-steps", cfg.calibration_steps, "ball-run steps for slack calibration");

  std::string audit_dir;
  double audit_slack = -1.0;
  auto* audit_cmd = app.add_subcommand("audit", "re-run the audits on a stored run directory");
  audit_cmd->add_option("dir", audit_dir, "run directory")->required();
  audit_cmd->add_option("--slack", audit_slack, "override the stored slack");

  std::string body_in, body_out;
  double inv_p = 3.0;
  auto* inv_cmd = app.add_subcommand("invariants", "invariants of a body snapshot");
  inv_cmd->add_option("body", body_in, "snapshot file")->required();
  inv_cmd->add_option("--p", inv_p, "power for the affine surface area");

  auto* polar_cmd = app.add_subcommand("polar", "write the polar body of a snapshot");
  polar_cmd->add_option("body", body_in, "snapshot file")->required();
  polar_cmd->add_option("-o,--output", body_out, "output snapshot")->required();

  auto* norm_cmd = app.add_subcommand("normalize", "write the SL-normalized image of a snapshot");
  norm_cmd->add_option("body", body_in, "snapshot file")->required();
  norm_cmd->add_option("-o,--output", body_out, "output snapshot")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      if (cfg.output_dir.empty()) cfg.output_dir = default_output_dir();
      const RunResult r = run(cfg);
      std::printf("%s: %ld steps, t = %.10g, T ~ %.10g (%s), %zu records, slack %.3g\n", r.halt.c_str(),
                  r.final_state.stats.steps, r.final_state.t, r.T, r.T_method.c_str(), r.series.size(), r.audit.slack);
      for (const auto& m : r.audit.monotone)
        std::printf("  %-10s worst %+.3e total %+.3e %s\n", m.field.c_str(), m.worst, m.total, m.pass ? "pass" : "FAIL");
      for (const auto& c : r.audit.ceilings)
        std::printf("  %-10s ceiling excess %+.3e %s\n", c.field.c_str(), c.worst_excess, c.pass ? "pass" : "FAIL");
      std::printf("  displacement worst %+.3e %s\n", r.audit.displacement.worst,
                  r.audit.displacement.pass ? "pass" : "FAIL");
      std::printf("  stability (%s) %.3e <= %.3e %s\n", r.audit.stability.status.c_str(), r.audit.stability.worst,
                  r.audit.stability.bound, r.audit.stability.pass ? "pass" : "fail");
      std::printf("artifacts in %s\n", cfg.output_dir.c_str());
      if (!r.failure.empty()) {
        std::fprintf(stderr, "run failed: %s\n", r.failure.c_str());
        return 1;
      }
      return r.audit.pass ? 0 : 2;
    }
    if (audit_cmd->parsed()) return audit_command(audit_dir, audit_slack);
    const FlowState st = load_state(body_in);
    if (inv_cmd->parsed()) {
      std::cout << invariants_json(st.body, inv_p).dump(2) << "\n";
      return 0;
    }
    if (polar_cmd->parsed()) {
      save_state(body_out, FlowState{polar(st.body), st.t, st.params, {}});
      return 0;
    }
    if (norm_cmd->parsed()) {
      const Normalized nb = normalize_sl(st.body);
      save_state(body_out, FlowState{nb.body, st.t, st.params, {}});
      std::printf("ratio %.10g lowner %s\n", nb.frame.ratio, nb.frame.lowner ? "yes" : "no");
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
