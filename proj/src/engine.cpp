#include "udsgd/engine.hpp"

#include <cmath>
#include <string>

#include "udsgd/errors.hpp"
#include "udsgd/parallel.hpp"
#include "udsgd/rng.hpp"

namespace udsgd::engine {

namespace {

constexpr double kDivergenceNorm2 = 1e24;  // |theta|^2 guard (|theta| > 1e12)

// Frobenius distance of the stack from its own mean, via pairwise
// differences: sum_i |theta_i - mean|^2 = (1/N) sum_{i<j} |theta_i - theta_j|^2.
// The pairwise form has no cancellation and is exactly zero when all rows
// are bit-identical (right after a full average).
double consensus_norm(const std::vector<Eigen::VectorXd>& thetas) {
  const std::size_t N = thetas.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      sum += (thetas[i] - thetas[j]).squaredNorm();
    }
  }
  return std::sqrt(sum / double(N));
}

void apply_mixing(const Eigen::MatrixXd& W,
                  std::vector<Eigen::VectorXd>& thetas,
                  std::vector<Eigen::VectorXd>& scratch) {
  const int N = int(thetas.size());
  for (int i = 0; i < N; ++i) {
    scratch[std::size_t(i)].setZero();
    for (int j = 0; j < N; ++j) {
      const double w = W(i, j);
      if (w != 0.0) scratch[std::size_t(i)] += w * thetas[std::size_t(j)];
    }
  }
  thetas.swap(scratch);
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  if (!cfg.problem) throw ConfigError("run config: no problem set");
  const int N = cfg.problem->agent_count();
  if (int(cfg.samplers.size()) != N) {
    throw ConfigError("run config: " + std::to_string(cfg.samplers.size()) +
                      " sampler specs for " + std::to_string(N) + " agents");
  }
  for (int a = 0; a < N; ++a) {
    const int B = cfg.problem->agent_data_size(a);
    if (B < 1) {
      throw ConfigError("run config: agent " + std::to_string(a) +
                        " holds no data");
    }
    sampling::validate_spec(cfg.samplers[std::size_t(a)], B);
  }
  comm::validate_pattern(cfg.pattern, N);
  comm::validate_schedules(cfg.step, cfg.interval);
  if (cfg.horizon < 1) throw ConfigError("run config: horizon must be >= 1");
  if (cfg.metric_stride < 1) {
    throw ConfigError("run config: metric stride must be >= 1");
  }
  const int d = cfg.problem->dim();
  if (cfg.theta_star.size() != d) {
    throw ConfigError("run config: theta_star has dimension " +
                      std::to_string(cfg.theta_star.size()) + ", expected " +
                      std::to_string(d));
  }
  if (cfg.theta0.size() != 0 && cfg.theta0.size() != d) {
    throw ConfigError("run config: theta0 has the wrong dimension");
  }
  if (!cfg.sampler_seeds.empty() && int(cfg.sampler_seeds.size()) != N) {
    throw ConfigError("run config: sampler seed overrides must cover every "
                      "agent");
  }
}

void aggregate(std::vector<Eigen::VectorXd>& thetas,
               const Eigen::MatrixXd& W) {
  if (thetas.empty()) throw ValidationError("aggregate: empty stack");
  if (W.rows() != long(thetas.size())) {
    throw ValidationError("aggregate: mixing matrix is " +
                          std::to_string(W.rows()) + "x" +
                          std::to_string(W.cols()) + " for a stack of " +
                          std::to_string(thetas.size()));
  }
  comm::check_doubly_stochastic(W, "aggregate");
  std::vector<Eigen::VectorXd> scratch(
      thetas.size(), Eigen::VectorXd::Zero(thetas.front().size()));
  apply_mixing(W, thetas, scratch);
}

Trajectory run(const RunConfig& cfg) {
  validate_config(cfg);
  const int N = cfg.problem->agent_count();
  const int d = cfg.problem->dim();

  // Per-agent sampler streams: independent lanes off the master seed unless
  // the test harness pins them.
  std::vector<sampling::Sampler> samplers;
  std::vector<Eigen::VectorXd> weights;
  samplers.reserve(std::size_t(N));
  weights.reserve(std::size_t(N));
  for (int a = 0; a < N; ++a) {
    const int B = cfg.problem->agent_data_size(a);
    const std::uint64_t s =
        cfg.sampler_seeds.empty()
            ? derive_seed(cfg.seed, 0x73616d70 /* "samp" */, std::uint64_t(a))
            : cfg.sampler_seeds[std::size_t(a)];
    samplers.emplace_back(cfg.samplers[std::size_t(a)], B, s);
    weights.push_back(
        sampling::stationary_weights(cfg.samplers[std::size_t(a)], B));
  }

  Rng comm_rng(derive_seed(cfg.seed, 0x636f6d6d /* "comm" */));
  const comm::AggregationTimes agg =
      comm::aggregation_times(cfg.interval, cfg.horizon);

  // Communication state.
  const Eigen::MatrixXd J = Eigen::MatrixXd::Constant(N, N, 1.0 / double(N));
  std::vector<int> selected;  // partial participation chain
  if (cfg.pattern.kind == comm::PatternKind::partial_participation) {
    selected = comm::draw_subset(N, cfg.pattern.participation, comm_rng);
  }

  std::vector<Eigen::VectorXd> thetas(
      std::size_t(N),
      cfg.theta0.size() ? cfg.theta0 : Eigen::VectorXd::Zero(d));
  std::vector<Eigen::VectorXd> scratch(std::size_t(N),
                                       Eigen::VectorXd::Zero(d));
  Eigen::VectorXd grad(d);
  Eigen::VectorXd mean(d);
  Eigen::VectorXd pr_sum = Eigen::VectorXd::Zero(d);

  Trajectory out;
  out.records.reserve(std::size_t(cfg.horizon / cfg.metric_stride + 2));
  std::size_t agg_cursor = 0;

  for (long n = 0; n < cfg.horizon; ++n) {
    const double gamma = cfg.step.at(n);  // gamma_{n+1}

    for (int a = 0; a < N; ++a) {
      auto& theta = thetas[std::size_t(a)];
      const int x = samplers[std::size_t(a)].next();
      cfg.problem->sample_grad(a, theta, x, grad);
      apply_local_step(theta, grad, gamma, weights[std::size_t(a)](x));
      if (!(theta.squaredNorm() < kDivergenceNorm2)) {
        throw NumericalError(
            "agent " + std::to_string(a) + " diverged at step " +
            std::to_string(n + 1) +
            " (|theta| > 1e12); the step size is too large for this problem");
      }
    }

    const long t = n + 1;
    if (agg_cursor < agg.times.size() && agg.times[agg_cursor] == t) {
      ++agg_cursor;
      switch (cfg.pattern.kind) {
        case comm::PatternKind::full_average:
          apply_mixing(J, thetas, scratch);
          break;
        case comm::PatternKind::decentralized_fixed:
          apply_mixing(cfg.pattern.mixing[0], thetas, scratch);
          break;
        case comm::PatternKind::decentralized_time_varying: {
          const int pick = comm_rng.next_index(int(cfg.pattern.mixing.size()));
          apply_mixing(cfg.pattern.mixing[std::size_t(pick)], thetas, scratch);
          break;
        }
        case comm::PatternKind::partial_participation: {
          auto draw = comm::draw_client_sampling(
              N, cfg.pattern.participation, selected, comm_rng);
          apply_mixing(draw.W, thetas, scratch);
          selected = std::move(draw.selected);
          break;
        }
      }
    }

    mean.setZero();
    for (const auto& theta : thetas) mean += theta;
    mean /= double(N);
    pr_sum += mean;

    if (t % cfg.metric_stride == 0 || t == cfg.horizon) {
      MetricRecord rec;
      rec.n = t;
      rec.gamma = gamma;
      rec.mse = (mean - cfg.theta_star).squaredNorm();
      rec.pr_mse = (pr_sum / double(t) - cfg.theta_star).squaredNorm();
      rec.consensus = consensus_norm(thetas);
      if (!std::isfinite(rec.mse) || !std::isfinite(rec.pr_mse) ||
          !std::isfinite(rec.consensus)) {
        throw NumericalError("non-finite metric at step " + std::to_string(t));
      }
      out.records.push_back(rec);
    }
  }

  out.final_average = mean;
  out.final_pr_average = pr_sum / double(cfg.horizon);
  return out;
}

EnsembleStats run_ensemble(const RunConfig& cfg, int trials, int threads) {
  validate_config(cfg);
  if (trials < 2) {
    throw ConfigError("ensemble: need at least two trials for variances");
  }

  std::vector<Trajectory> slots(static_cast<std::size_t>(trials));
  parallel_trials(trials, threads, [&](int trial) {
    RunConfig mine = cfg;
    mine.seed = derive_seed(cfg.seed, 0x74726c73 /* "trls" */,
                            std::uint64_t(trial));
    slots[std::size_t(trial)] = run(mine);
  });

  const std::size_t C = slots.front().records.size();
  for (const auto& t : slots) {
    if (t.records.size() != C) {
      throw NumericalError("ensemble trials recorded different checkpoints");
    }
  }

  EnsembleStats out;
  out.trials = trials;
  out.checkpoints.resize(C);
  const double R = double(trials);
  for (std::size_t c = 0; c < C; ++c) {
    auto& cp = out.checkpoints[c];
    cp.n = slots.front().records[c].n;
    cp.gamma = slots.front().records[c].gamma;

    // Fixed-order accumulation: trial 0, 1, 2, ... regardless of the thread
    // count, so the reduction is bit-stable.
    double mse_sum = 0.0, pr_sum = 0.0, cons_sum = 0.0;
    for (const auto& t : slots) {
      mse_sum += t.records[c].mse;
      pr_sum += t.records[c].pr_mse;
      cons_sum += t.records[c].consensus;
    }
    cp.mse_mean = mse_sum / R;
    cp.pr_mse_mean = pr_sum / R;
    cp.consensus_mean = cons_sum / R;

    double mse_sq = 0.0, pr_sq = 0.0, cons_sq = 0.0;
    for (const auto& t : slots) {
      const double dm = t.records[c].mse - cp.mse_mean;
      const double dp = t.records[c].pr_mse - cp.pr_mse_mean;
      const double dc = t.records[c].consensus - cp.consensus_mean;
      mse_sq += dm * dm;
      pr_sq += dp * dp;
      cons_sq += dc * dc;
    }
    cp.mse_var = mse_sq / (R - 1.0);
    cp.pr_mse_var = pr_sq / (R - 1.0);
    cp.consensus_var = cons_sq / (R - 1.0);
    cp.mse_se = std::sqrt(cp.mse_var / R);
    cp.pr_mse_se = std::sqrt(cp.pr_mse_var / R);
    cp.consensus_se = std::sqrt(cp.consensus_var / R);
  }

  // CLT-scaled covariances at the horizon, centered at the trial mean.
  const int d = int(slots.front().final_average.size());
  out.final_n = cfg.horizon;
  const double gamma_final = cfg.step.at(cfg.horizon - 1);

  Eigen::VectorXd mean_final = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mean_pr = Eigen::VectorXd::Zero(d);
  for (const auto& t : slots) {
    mean_final += t.final_average;
    mean_pr += t.final_pr_average;
  }
  mean_final /= R;
  mean_pr /= R;

  Eigen::MatrixXd cov_final = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd cov_pr = Eigen::MatrixXd::Zero(d, d);
  for (const auto& t : slots) {
    const Eigen::VectorXd df = t.final_average - mean_final;
    const Eigen::VectorXd dp = t.final_pr_average - mean_pr;
    cov_final += df * df.transpose();
    cov_pr += dp * dp.transpose();
  }
  cov_final /= (R - 1.0);
  cov_pr /= (R - 1.0);

  out.scaled_covariance = cov_final / gamma_final;
  out.pr_scaled_covariance = cov_pr * double(cfg.horizon);
  return out;
}

}  // namespace udsgd::engine
