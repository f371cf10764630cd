#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "udsgd/communication.hpp"
#include "udsgd/markov.hpp"
#include "udsgd/problems.hpp"
#include "udsgd/sampling.hpp"

namespace udsgd::clt {

// Closed-form predictions for the limiting behavior of the distributed
// iterates: per-agent gradient-noise covariance U_i, the system average
// U = (1/N^2) sum U_i, the drift matrix M, the limiting covariance V
// (Lyapunov solve of M V + V M' = -U), and the Polyak-Ruppert covariance
// V' = H^{-1} U H^{-1}. These are compared against seeded ensembles.

// Rows w(x) * grad F_agent(theta*, x) for every local sample x; the
// reweighting makes the rows' weighted time average target the uniform
// block mean regardless of the sampling strategy.
Eigen::MatrixXd weighted_gradient_table(const problems::Problem& problem,
                                        int agent,
                                        const Eigen::VectorXd& theta_star,
                                        const sampling::SamplerSpec& spec);

// True when U_i has an exact finite-kernel route: iid always; srw/nbrw when
// the walk (srw) or its directed-edge lift (nbrw) is ergodic on the agent's
// graph. Shuffling and srrw have no fixed kernel and always estimate.
bool closed_form_available(const sampling::SamplerSpec& spec,
                           int dataset_size);

// Exact U_i through the chain's long-run covariance. Throws ValidationError
// pointing at agent_U_mc when no finite kernel exists (shuffle/srrw) or the
// kernel is not ergodic (bipartite srw, short-cycle-free nbrw).
Eigen::MatrixXd agent_U(const sampling::SamplerSpec& spec,
                        const problems::Problem& problem, int agent,
                        const Eigen::VectorXd& theta_star);

// Simulation estimate of U_i for the kernel-free strategies; also the cross
// check for the exact route.
struct McOptions {
  long horizon = 100000;
  int trials = 100;
  int threads = 1;
  std::uint64_t seed = 0;
};
markov::McCovariance agent_U_mc(const sampling::SamplerSpec& spec,
                                const problems::Problem& problem, int agent,
                                const Eigen::VectorXd& theta_star,
                                const McOptions& opts);

// U = (1/N^2) sum_i U_i. Dividing the per-agent noise by N is what drives
// the linear speedup: N identical agents give U = U_0 / N.
Eigen::MatrixXd system_U(const std::vector<Eigen::MatrixXd>& agent_Us);

// M = -H for step exponent a < 1, or I/(2 gamma*) - H at a = 1 (then
// gamma* must exceed 1/(2 mu) for M to stay Hurwitz; violations throw
// ConfigError naming the eigenvalue and the bound).
Eigen::MatrixXd drift_matrix(const Eigen::MatrixXd& H,
                             const comm::StepSchedule& step);

// Unique symmetric PSD solution of M V + V M' + U = 0.
enum class LyapunovMethod {
  automatic,  // spectral when M is symmetric, kronecker otherwise
  spectral,   // eigendecomposition of symmetric M
  kronecker,  // dense (I (x) M + M (x) I) solve; d capped at 128
};
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& M,
                               const Eigen::MatrixXd& U,
                               LyapunovMethod method = LyapunovMethod::automatic);

// Literal quadrature oracle: composite trapezoid of e^{Mt} U e^{M't} over
// [0, T] with uniform step dt.
Eigen::MatrixXd integral_check(const Eigen::MatrixXd& M,
                               const Eigen::MatrixXd& U, double T, double dt);

// Self-tuning quadrature of the same integral over [0, infinity): a fine
// trapezoid base panel on [0, ~1/|M|], then exact interval doubling
// V_{2T} = V_T + e^{MT} V_T e^{M'T} until the propagator is negligible.
Eigen::MatrixXd integral_covariance(const Eigen::MatrixXd& M,
                                    const Eigen::MatrixXd& U);

// Polyak-Ruppert limiting covariance V' = H^{-1} U H^{-1} (SPD H).
Eigen::MatrixXd pr_covariance(const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& U);

// The CLT scaling prediction for the mean-squared error at step n (1-based):
// gamma_n * trace(V).
double predicted_mse(const Eigen::MatrixXd& V, const comm::StepSchedule& step,
                     long n);

// Everything the prediction pipeline produces for one configuration.
struct CovarianceReport {
  std::vector<Eigen::MatrixXd> agent_U;
  std::vector<char> agent_used_mc;  // 1 where U_i came from simulation
  Eigen::MatrixXd U;
  Eigen::MatrixXd H;        // Hessian at the optimum
  double mu = 0.0;          // lambda_min(H)
  Eigen::MatrixXd M;        // drift
  Eigen::MatrixXd V;        // limiting covariance
  Eigen::MatrixXd V_prime;  // Polyak-Ruppert limiting covariance
  double trace_V = 0.0;
  double trace_V_prime = 0.0;
  comm::StepSchedule step;
};

// Runs the full chain U_i -> U -> M -> V -> V' for one problem/sampler
// configuration. Kernel-free agents fall back to the MC estimate with the
// given options (seed is varied per agent).
CovarianceReport predict(const problems::Problem& problem,
                         const problems::Optimum& opt,
                         const std::vector<sampling::SamplerSpec>& specs,
                         const comm::StepSchedule& step,
                         const McOptions& mc = McOptions{});

// Prediction-vs-ensemble comparison table.
struct EnsemblePoint {
  long n = 0;
  double mse = 0.0;  // mean over trials of |theta_bar_n - theta*|^2
};
struct CheckpointComparison {
  long n = 0;
  double predicted = 0.0;
  double empirical = 0.0;
  double ratio = 0.0;  // empirical / predicted
};
struct Comparison {
  std::vector<CheckpointComparison> checkpoints;
  double trace_predicted = 0.0;  // trace(V)
  double trace_empirical = 0.0;  // trace of the scaled final covariance
  double trace_ratio = 0.0;
  double max_entry_gap = 0.0;  // max_ij |V_ij - C_ij|
};
Comparison compare(const CovarianceReport& report,
                   const std::vector<EnsemblePoint>& mse_curve,
                   const Eigen::MatrixXd& scaled_covariance);

const char* loewner_name(markov::LoewnerOrder order);

}  // namespace udsgd::clt
