#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "udsgd/communication.hpp"
#include "udsgd/problems.hpp"
#include "udsgd/sampling.hpp"

namespace udsgd::engine {

// The distributed loop: every tick each agent draws one sample from its own
// strategy and takes a reweighted gradient step; at scheduled times the
// stacked parameters are mixed by a doubly stochastic matrix. Fully
// deterministic given the master seed.

struct RunConfig {
  std::shared_ptr<const problems::Problem> problem;
  std::vector<sampling::SamplerSpec> samplers;  // one per agent
  comm::CommPattern pattern;
  comm::IntervalSchedule interval;
  comm::StepSchedule step;
  long horizon = 10000;
  long metric_stride = 100;  // record every this many steps (and at the end)
  std::uint64_t seed = 0;

  Eigen::VectorXd theta_star;  // metrics are distances to this point
  Eigen::VectorXd theta0;      // empty = start at zero

  // Normally each agent's sampler stream is derived from the master seed;
  // tests override this to couple runs draw-for-draw.
  std::vector<std::uint64_t> sampler_seeds;
};

void validate_config(const RunConfig& cfg);

struct MetricRecord {
  long n = 0;
  double mse = 0.0;        // |theta_bar_n - theta*|^2
  double pr_mse = 0.0;     // same for the running average of theta_bar
  double consensus = 0.0;  // Frobenius distance of the stack from its mean
  double gamma = 0.0;      // step size gamma_n
};

struct Trajectory {
  std::vector<MetricRecord> records;
  Eigen::VectorXd final_average;     // theta_bar at the horizon
  Eigen::VectorXd final_pr_average;  // running average at the horizon
};

// One reweighted gradient step in place.
inline void apply_local_step(Eigen::VectorXd& theta,
                             const Eigen::VectorXd& grad, double gamma,
                             double weight) {
  theta -= (gamma * weight) * grad;
}

// Theta' rows: theta'_i = sum_j W(i, j) theta_j. Validates W against the
// stack (square, matching size, doubly stochastic).
void aggregate(std::vector<Eigen::VectorXd>& thetas, const Eigen::MatrixXd& W);

Trajectory run(const RunConfig& cfg);

// Ensemble statistics over independently seeded trials. Per checkpoint:
// mean / unbiased variance / standard error of each metric. At the final
// checkpoint: the CLT-scaled parameter covariance over trials,
//   scaled_covariance    = (1 / gamma_n) Cov(theta_bar_n)
//   pr_scaled_covariance = n Cov(pr_average_n)
// both centered at the trial mean. Memory scales with
// trials * (horizon / metric_stride).
struct CheckpointStats {
  long n = 0;
  double gamma = 0.0;
  double mse_mean = 0.0, mse_var = 0.0, mse_se = 0.0;
  double pr_mse_mean = 0.0, pr_mse_var = 0.0, pr_mse_se = 0.0;
  double consensus_mean = 0.0, consensus_var = 0.0, consensus_se = 0.0;
};
struct EnsembleStats {
  std::vector<CheckpointStats> checkpoints;
  Eigen::MatrixXd scaled_covariance;
  Eigen::MatrixXd pr_scaled_covariance;
  long final_n = 0;
  int trials = 0;
};
EnsembleStats run_ensemble(const RunConfig& cfg, int trials, int threads = 1);

}  // namespace udsgd::engine
