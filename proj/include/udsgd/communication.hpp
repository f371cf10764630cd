#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "udsgd/graph.hpp"
#include "udsgd/rng.hpp"

namespace udsgd::comm {

// How agents combine parameters at aggregation times:
//   full_average                everyone averages (W = J)
//   partial_participation       a uniform k-subset is averaged and the result
//                               routed to the next selected subset; everyone
//                               else keeps running locally
//   decentralized_fixed         one fixed doubly stochastic mixing matrix
//   decentralized_time_varying  uniform choice from a finite matrix pool at
//                               every aggregation
enum class PatternKind {
  full_average,
  partial_participation,
  decentralized_fixed,
  decentralized_time_varying,
};

const char* pattern_name(PatternKind k);

struct CommPattern {
  PatternKind kind = PatternKind::full_average;
  int participation = 0;                // |S|, partial_participation only
  std::vector<Eigen::MatrixXd> mixing;  // decentralized kinds
};

CommPattern full_average();
CommPattern partial_participation(int k);
CommPattern decentralized_fixed(Eigen::MatrixXd W);
CommPattern decentralized_time_varying(std::vector<Eigen::MatrixXd> Ws);

// Throws ValidationError unless the pattern is usable with `num_agents`
// agents (sizes match, participation in range, mixing matrices doubly
// stochastic within 1e-12).
void validate_pattern(const CommPattern& pattern, int num_agents);
void check_doubly_stochastic(const Eigen::MatrixXd& W, const char* what);

// Metropolis-Hastings weights on a communication graph:
//   W(i, j) = min(1/deg(i), 1/deg(j)) on edges, diagonal takes the rest.
// Symmetric and doubly stochastic by construction.
Eigen::MatrixXd mh_matrix(const Graph& g);

// Second-largest eigenvalue modulus of a symmetric stochastic matrix; the
// mixing contraction factor ||W^T W - J|| equals its square.
double second_eigenvalue_modulus(const Eigen::MatrixXd& W);

// One communication round under client sampling. `previous` is the sorted
// subset selected last round (their parameters are averaged now); a fresh
// uniform k-subset S' receives the average via an order-preserving routing
// permutation, so W = T * W_S is doubly stochastic and W^T W = W_S.
struct ClientSamplingDraw {
  Eigen::MatrixXd W;
  std::vector<int> selected;  // S', sorted
};
ClientSamplingDraw draw_client_sampling(int num_agents, int k,
                                        const std::vector<int>& previous,
                                        Rng& rng);

// Sorted uniform k-subset of {0..n-1}.
std::vector<int> draw_subset(int n, int k, Rng& rng);

// Number of local steps in communication block l (1-based):
//   constant         K
//   log_growth       max(1, ceil(ln l))
//   loglog_growth    1 for l < 3, else max(1, ceil(ln ln l))
struct IntervalSchedule {
  enum class Kind { constant, log_growth, loglog_growth };
  Kind kind = Kind::constant;
  long constant_K = 1;

  long length(long l) const;
  bool growing() const { return kind != Kind::constant; }
};

// Polynomially decaying step size gamma_n = gamma_star / n^a used at the
// n-th local step (n >= 1); at(tick) indexes from tick 0.
struct StepSchedule {
  double gamma_star = 1.0;
  double a = 1.0;  // in (0.5, 1]

  double at(long tick) const;  // gamma_{tick+1}
};

void validate_step(const StepSchedule& s);
// Growing communication intervals keep their guarantees only with a = 1;
// throws ConfigError otherwise.
void validate_schedules(const StepSchedule& s, const IntervalSchedule& k);

// Aggregation happens after local step n_l = K_1 + ... + K_l. `times` lists
// the n_l <= horizon; tau(n) = min{l : n_l >= n} identifies the block of
// step n in 1..horizon.
struct AggregationTimes {
  std::vector<long> times;
  long horizon = 0;

  long tau(long n) const;
  long block_length(long n) const;  // K_{tau(n)}
};
AggregationTimes aggregation_times(const IntervalSchedule& schedule,
                                   long horizon);

// Window diagnostics for the step/interval interplay, built on
// eta_n = gamma_n * K_{tau(n)}^(L+1):
//   eta2_sum            sum of eta_n^2 over the horizon
//   eta2_tail_fraction  share contributed by the second half of the window
//   last_boundary_ratio eta_{n_{l-1}+1} / eta_{n_l+1} for the last two
//                       boundaries in the window (drifts to 1 for admissible
//                       schedules)
//   max_growth_first /  windowed maxima of K_{tau(n)} * gamma_n^(1/(2(L+1)))
//   max_growth_second   over each half; the second should not exceed the first
// Flags are heuristics over the finite window, not proofs.
struct ScheduleDiagnostics {
  double eta2_sum = 0.0;
  double eta2_tail_fraction = 0.0;
  double last_boundary_ratio = 1.0;
  double max_growth_first = 0.0;
  double max_growth_second = 0.0;
  bool eta2_converging = false;
  bool boundary_ratio_ok = false;
  bool growth_ok = false;
};
ScheduleDiagnostics schedule_diagnostics(const StepSchedule& step,
                                         const IntervalSchedule& interval,
                                         long horizon, int L);

// Estimates the mixing contraction ||E[W^T W] - J|| for a pattern:
// exact for deterministic kinds and finite matrix pools, Monte Carlo over
// `draws` rounds for client sampling. contracting <=> value < 1.
struct ContractionReport {
  double value = 0.0;
  bool contracting = false;
  int draws_used = 0;
};
ContractionReport verify_contraction(const CommPattern& pattern,
                                     int num_agents, int draws,
                                     std::uint64_t seed);

}  // namespace udsgd::comm
