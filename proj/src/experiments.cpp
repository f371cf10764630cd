#include "udsgd/experiments.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "udsgd/clt.hpp"
#include "udsgd/errors.hpp"
#include "udsgd/rng.hpp"

namespace udsgd::experiments {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const config::ExperimentConfig& cfg,
                       const std::string& name, const std::string& columns,
                       Outcome& out) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << "# udsgd-lab config_hash=" << cfg.config_hash << " seed=" << cfg.seed
    << "\n";
  f << columns << "\n";
  out.files.push_back(path.string());
  return f;
}

void write_matrix_rows(std::ofstream& f, const std::string& name,
                       const Eigen::MatrixXd& m) {
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      f << name << ',' << i << ',' << j << ',' << fmt(m(i, j)) << "\n";
    }
  }
}

void write_ensemble_rows(std::ofstream& f, const std::string& label,
                         const engine::EnsembleStats& stats) {
  for (const auto& cp : stats.checkpoints) {
    if (!label.empty()) f << label << ',';
    f << cp.n << ',' << fmt(cp.gamma) << ',' << fmt(cp.mse_mean) << ','
      << fmt(cp.mse_var) << ',' << fmt(cp.mse_se) << ','
      << fmt(cp.pr_mse_mean) << ',' << fmt(cp.pr_mse_var) << ','
      << fmt(cp.pr_mse_se) << ',' << fmt(cp.consensus_mean) << ','
      << fmt(cp.consensus_var) << ',' << fmt(cp.consensus_se) << "\n";
  }
}

constexpr const char* kEnsembleColumns =
    "n,gamma,mse_mean,mse_var,mse_se,pr_mse_mean,pr_mse_var,pr_mse_se,"
    "consensus_mean,consensus_var,consensus_se";

// Rows of the always-written summary.csv, mirrored into Outcome::summary.
class Summary {
 public:
  void add(const std::string& key, const std::string& value) {
    rows_.emplace_back(key, value);
  }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  void add(const std::string& key, long value) {
    add(key, std::to_string(value));
  }

  void finish(const config::ExperimentConfig& cfg, Outcome& out) const {
    std::ofstream f = open_csv(cfg, "summary.csv", "key,value", out);
    std::ostringstream text;
    text << "experiment: " << config::kind_name(cfg.experiment) << "\n";
    for (const auto& [k, v] : rows_) {
      f << k << ',' << v << "\n";
      text << "  " << k << " = " << v << "\n";
    }
    out.summary = text.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> rows_;
};

clt::CovarianceReport predict_for(const config::ExperimentConfig& cfg,
                                  const engine::RunConfig& run) {
  const problems::Optimum opt = problems::solve_optimum(*run.problem);
  clt::McOptions mc;
  mc.threads = cfg.threads;
  mc.seed = derive_seed(cfg.seed, 0x636c746d /* "cltm" */);
  return clt::predict(*run.problem, opt, run.samplers, run.step, mc);
}

Outcome run_single(const config::ExperimentConfig& cfg) {
  Outcome out;
  const engine::Trajectory t = engine::run(cfg.run);
  std::ofstream f =
      open_csv(cfg, "trajectory.csv", "trial,n,mse,pr_mse,consensus,gamma",
               out);
  for (const auto& rec : t.records) {
    f << 0 << ',' << rec.n << ',' << fmt(rec.mse) << ',' << fmt(rec.pr_mse)
      << ',' << fmt(rec.consensus) << ',' << fmt(rec.gamma) << "\n";
  }

  Summary s;
  s.add("agents", long(cfg.run.problem->agent_count()));
  s.add("horizon", cfg.horizon);
  s.add("final_mse", t.records.back().mse);
  s.add("final_pr_mse", t.records.back().pr_mse);
  s.add("final_consensus", t.records.back().consensus);
  s.finish(cfg, out);
  return out;
}

Outcome run_ens(const config::ExperimentConfig& cfg) {
  Outcome out;
  const engine::EnsembleStats stats =
      engine::run_ensemble(cfg.run, cfg.trials, cfg.threads);

  std::ofstream f =
      open_csv(cfg, "ensemble_stats.csv", kEnsembleColumns, out);
  write_ensemble_rows(f, "", stats);

  std::ofstream g = open_csv(cfg, "ensemble_covariance.csv",
                             "matrix,i,j,value", out);
  g << "# matrices: scaled_covariance pr_scaled_covariance\n";
  write_matrix_rows(g, "scaled_covariance", stats.scaled_covariance);
  write_matrix_rows(g, "pr_scaled_covariance", stats.pr_scaled_covariance);

  Summary s;
  s.add("trials", long(stats.trials));
  s.add("final_n", stats.final_n);
  s.add("final_mse_mean", stats.checkpoints.back().mse_mean);
  s.add("final_mse_se", stats.checkpoints.back().mse_se);
  s.add("scaled_trace", stats.scaled_covariance.trace());
  s.add("pr_scaled_trace", stats.pr_scaled_covariance.trace());
  s.finish(cfg, out);
  return out;
}

void write_report_csv(const config::ExperimentConfig& cfg,
                      const clt::CovarianceReport& report, Outcome& out) {
  std::ofstream f =
      open_csv(cfg, "covariance_report.csv", "matrix,i,j,value", out);
  std::ostringstream manifest;
  manifest << "# matrices: U H M V V_prime";
  for (std::size_t i = 0; i < report.agent_U.size(); ++i) {
    manifest << " agent_U_" << i;
  }
  f << manifest.str() << "\n";
  write_matrix_rows(f, "U", report.U);
  write_matrix_rows(f, "H", report.H);
  write_matrix_rows(f, "M", report.M);
  write_matrix_rows(f, "V", report.V);
  write_matrix_rows(f, "V_prime", report.V_prime);
  for (std::size_t i = 0; i < report.agent_U.size(); ++i) {
    write_matrix_rows(f, "agent_U_" + std::to_string(i), report.agent_U[i]);
  }
}

Outcome run_clt_compare(const config::ExperimentConfig& cfg) {
  Outcome out;
  const clt::CovarianceReport report = predict_for(cfg, cfg.run);
  const engine::EnsembleStats stats =
      engine::run_ensemble(cfg.run, cfg.trials, cfg.threads);

  std::vector<clt::EnsemblePoint> curve;
  for (const auto& cp : stats.checkpoints) {
    curve.push_back({cp.n, cp.mse_mean});
  }
  const clt::Comparison comp =
      clt::compare(report, curve, stats.scaled_covariance);

  std::ofstream f = open_csv(cfg, "ensemble_stats.csv", kEnsembleColumns, out);
  write_ensemble_rows(f, "", stats);
  write_report_csv(cfg, report, out);

  std::ofstream g =
      open_csv(cfg, "clt_compare.csv",
               "n,predicted_mse,empirical_mse,empirical_se,ratio", out);
  for (std::size_t i = 0; i < comp.checkpoints.size(); ++i) {
    const auto& cp = comp.checkpoints[i];
    g << cp.n << ',' << fmt(cp.predicted) << ',' << fmt(cp.empirical) << ','
      << fmt(stats.checkpoints[i].mse_se) << ',' << fmt(cp.ratio) << "\n";
  }

  int mc_agents = 0;
  for (char used : report.agent_used_mc) mc_agents += used ? 1 : 0;

  Summary s;
  s.add("trials", long(stats.trials));
  s.add("mu", report.mu);
  s.add("predicted_trace_V", comp.trace_predicted);
  s.add("empirical_scaled_trace", comp.trace_empirical);
  s.add("trace_ratio", comp.trace_ratio);
  s.add("trace_relative_error", std::abs(comp.trace_ratio - 1.0));
  s.add("max_entry_gap", comp.max_entry_gap);
  s.add("predicted_trace_V_prime", report.trace_V_prime);
  s.add("agents_estimated_by_mc", long(mc_agents));
  s.finish(cfg, out);
  return out;
}

Outcome run_speedup(const config::ExperimentConfig& cfg) {
  Outcome out;
  std::ofstream f = open_csv(
      cfg, "speedup_sweep.csv",
      "k,agents,predicted_trace_V,empirical_scaled_trace,final_mse_mean,"
      "final_mse_se,predicted_ratio,empirical_ratio",
      out);

  Summary s;
  double base_predicted = 0.0;
  double base_empirical = 0.0;
  for (std::size_t i = 0; i < cfg.speedup_factors.size(); ++i) {
    const int k = cfg.speedup_factors[i];
    const engine::RunConfig run = config::materialize_duplicated(cfg, k);
    const clt::CovarianceReport report = predict_for(cfg, run);
    const engine::EnsembleStats stats =
        engine::run_ensemble(run, cfg.trials, cfg.threads);
    const double empirical = stats.scaled_covariance.trace();
    if (i == 0) {
      base_predicted = report.trace_V;
      base_empirical = empirical;
    }
    f << k << ',' << run.problem->agent_count() << ','
      << fmt(report.trace_V) << ',' << fmt(empirical) << ','
      << fmt(stats.checkpoints.back().mse_mean) << ','
      << fmt(stats.checkpoints.back().mse_se) << ','
      << fmt(report.trace_V / base_predicted) << ','
      << fmt(empirical / base_empirical) << "\n";
    s.add("trace_V_k" + std::to_string(k), report.trace_V);
    s.add("scaled_trace_k" + std::to_string(k), empirical);
  }
  s.add("note", "doubling the agents should halve both traces");
  s.finish(cfg, out);
  return out;
}

Outcome run_network_independence(const config::ExperimentConfig& cfg) {
  Outcome out;
  const int N = cfg.agents;
  const long K =
      cfg.interval.constant_K > 1 ? cfg.interval.constant_K : 5;

  // Four communication regimes over one and the same problem and samplers:
  // the limiting covariance prediction does not depend on the pattern, so
  // their terminal scaled traces should agree.
  struct Variant {
    std::string name;
    comm::CommPattern pattern;
    comm::IntervalSchedule interval;
  };
  config::PatternRecipe vt;
  vt.kind = "decentralized_time_varying";
  config::PatternRecipe dfl;
  dfl.kind = "decentralized_fixed";
  std::vector<Variant> variants;
  variants.push_back({"centralized", comm::full_average(),
                      {comm::IntervalSchedule::Kind::constant, 1}});
  variants.push_back({"local_full_participation", comm::full_average(),
                      {comm::IntervalSchedule::Kind::constant, K}});
  variants.push_back({"decentralized_time_varying",
                      config::build_pattern(vt, N),
                      {comm::IntervalSchedule::Kind::constant, 1}});
  variants.push_back(
      {"decentralized_fixed_growing", config::build_pattern(dfl, N),
       cfg.step.a == 1.0
           ? comm::IntervalSchedule{comm::IntervalSchedule::Kind::log_growth,
                                    1}
           : comm::IntervalSchedule{comm::IntervalSchedule::Kind::constant,
                                    K}});

  std::ofstream f = open_csv(cfg, "network_independence.csv",
                             std::string("variant,") + kEnsembleColumns, out);

  const clt::CovarianceReport report = predict_for(cfg, cfg.run);
  Summary s;
  s.add("predicted_trace_V", report.trace_V);

  double lo = 0.0, hi = 0.0;
  for (const auto& variant : variants) {
    engine::RunConfig run = cfg.run;
    run.pattern = variant.pattern;
    run.interval = variant.interval;
    const engine::EnsembleStats stats =
        engine::run_ensemble(run, cfg.trials, cfg.threads);
    write_ensemble_rows(f, variant.name, stats);
    const double trace = stats.scaled_covariance.trace();
    s.add("scaled_trace_" + variant.name, trace);
    if (lo == 0.0 || trace < lo) lo = trace;
    if (trace > hi) hi = trace;
  }
  s.add("scaled_trace_spread", hi / lo);
  s.finish(cfg, out);
  return out;
}

Outcome run_sampling_sweep(const config::ExperimentConfig& cfg) {
  Outcome out;
  std::ofstream f = open_csv(cfg, "sampling_sweep.csv",
                             std::string("variant,") + kEnsembleColumns, out);
  Summary s;
  for (const auto& variant : cfg.variants) {
    const engine::RunConfig run = config::materialize(cfg, variant.samplers);
    const engine::EnsembleStats stats =
        engine::run_ensemble(run, cfg.trials, cfg.threads);
    write_ensemble_rows(f, variant.name, stats);
    s.add("final_mse_" + variant.name, stats.checkpoints.back().mse_mean);
    s.add("final_mse_se_" + variant.name, stats.checkpoints.back().mse_se);
  }
  s.finish(cfg, out);
  return out;
}

}  // namespace

Outcome run_experiment(const config::ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case config::ExperimentKind::single_run:
      return run_single(cfg);
    case config::ExperimentKind::ensemble:
      return run_ens(cfg);
    case config::ExperimentKind::clt_compare:
      return run_clt_compare(cfg);
    case config::ExperimentKind::speedup_sweep:
      return run_speedup(cfg);
    case config::ExperimentKind::network_independence:
      return run_network_independence(cfg);
    case config::ExperimentKind::sampling_sweep:
      return run_sampling_sweep(cfg);
  }
  throw ConfigError("unreachable experiment kind");
}

Outcome run_diagnostics(const config::ExperimentConfig& cfg) {
  Outcome out;
  const comm::ScheduleDiagnostics sd =
      comm::schedule_diagnostics(cfg.step, cfg.interval, cfg.horizon, 1);
  const comm::ContractionReport cr = comm::verify_contraction(
      cfg.run.pattern, cfg.agents, 20000,
      derive_seed(cfg.seed, 0x64696167 /* "diag" */));

  Summary s;
  s.add("eta2_sum", sd.eta2_sum);
  s.add("eta2_tail_fraction", sd.eta2_tail_fraction);
  s.add("eta2_converging", sd.eta2_converging ? "yes" : "no");
  s.add("last_boundary_ratio", sd.last_boundary_ratio);
  s.add("boundary_ratio_ok", sd.boundary_ratio_ok ? "yes" : "no");
  s.add("max_growth_first_half", sd.max_growth_first);
  s.add("max_growth_second_half", sd.max_growth_second);
  s.add("growth_ok", sd.growth_ok ? "yes" : "no");
  s.add("contraction_value", cr.value);
  s.add("contracting", cr.contracting ? "yes" : "no");
  s.add("contraction_draws", long(cr.draws_used));
  s.finish(cfg, out);
  return out;
}

}  // namespace udsgd::experiments
