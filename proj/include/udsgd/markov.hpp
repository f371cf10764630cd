#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "udsgd/graph.hpp"

namespace udsgd::sampling {
struct SamplerSpec;
}

namespace udsgd::markov {

// Finite-chain machinery: kernels, stationary laws, the fundamental matrix,
// and the long-run covariance of time averages, each with an independent
// estimation route (closed form / truncated series / Monte Carlo) so the
// routes can be played against each other in tests.

// Row-stochastic matrix, validated at construction: no negative entries and
// row sums within 1e-12 of one.
class TransitionMatrix {
 public:
  static TransitionMatrix checked(Eigen::MatrixXd P);
  const Eigen::MatrixXd& mat() const { return P_; }
  int size() const { return int(P_.rows()); }

  bool is_irreducible() const;  // support digraph strongly connected
  int period() const;           // gcd of support cycle lengths (irreducible only)
  bool is_ergodic() const;      // irreducible and aperiodic
  void require_irreducible(const char* caller) const;
  void require_ergodic(const char* caller) const;

 private:
  explicit TransitionMatrix(Eigen::MatrixXd P) : P_(std::move(P)) {}
  Eigen::MatrixXd P_;
};

// Probability vector: entries >= 0, sums to one within 1e-12.
class Distribution {
 public:
  static Distribution checked(Eigen::VectorXd pi);
  const Eigen::VectorXd& vec() const { return pi_; }
  int size() const { return int(pi_.size()); }

 private:
  explicit Distribution(Eigen::VectorXd pi) : pi_(std::move(pi)) {}
  Eigen::VectorXd pi_;
};

// Simple random walk kernel: P(u, v) = 1/deg(u) on edges.
TransitionMatrix srw_kernel(const Graph& g);

// pi(v) proportional to deg(v); the stationary law shared by the walk-based
// samplers here.
Distribution degree_distribution(const Graph& g);

// Unique stationary law of an irreducible chain. Direct solve of the
// balance system with a normalization row; falls back to damped power
// iteration if the solve degenerates. Verified to 1e-10 balance residual.
Distribution stationary(const TransitionMatrix& P);

// Z = (I - P + 1 pi^T)^{-1}. Requires irreducibility; the residual of the
// inversion is checked to 1e-10.
Eigen::MatrixXd fundamental_matrix(const TransitionMatrix& P,
                                   const Distribution& pi);

// Row-wise solution m = Z (G - 1 mu^T) of the system m - P m = G - 1 mu^T,
// mu = G^T pi. G holds one function value row per state.
Eigen::MatrixXd poisson_solution(const TransitionMatrix& P,
                                 const Distribution& pi,
                                 const Eigen::MatrixXd& G);

// Long-run covariance of sqrt(n) * (time average of G rows) for an ergodic
// chain started anywhere:
//   Sigma = Gc^T (D Z + Z^T D - D) Gc,  D = diag(pi),  Gc = G - 1 mu^T.
// Symmetric PSD by construction (validated). The centering makes the
// i.i.d. special case P = 1 pi^T collapse to Cov_pi(G) exactly.
Eigen::MatrixXd asymptotic_covariance(const TransitionMatrix& P,
                                      const Distribution& pi,
                                      const Eigen::MatrixXd& G);

// Independent oracle: truncated autocovariance series
//   Sigma_k = Gc^T D Gc + sum_{k=1..k_max} (Gc^T D P^k Gc + transpose).
// increment_norms[k-1] reports the Frobenius norm of term k so convergence
// in k_max can be inspected.
struct SeriesCovariance {
  Eigen::MatrixXd sigma;
  std::vector<double> increment_norms;
};
SeriesCovariance asymptotic_covariance_series(const TransitionMatrix& P,
                                              const Distribution& pi,
                                              const Eigen::MatrixXd& G,
                                              int k_max);

// Simulation oracle: R independent runs of length n; the estimate is
// n * sample covariance of the per-run time-average vectors, with a
// Gaussian-approximation standard error per entry:
//   se_ij = sqrt((S_ii S_jj + S_ij^2) / (R - 1)).
struct McCovariance {
  Eigen::MatrixXd estimate;
  Eigen::MatrixXd standard_error;
};

// Chain variant: trajectories follow P from a pi-distributed start.
McCovariance asymptotic_covariance_mc(const TransitionMatrix& P,
                                      const Eigen::MatrixXd& G, long horizon,
                                      int trials, std::uint64_t seed,
                                      int threads = 1);

// Sampler variant: trajectories come from a data sampler (covers the
// strategies with no fixed kernel, e.g. shuffling and self-repellent walks).
McCovariance asymptotic_covariance_mc(const sampling::SamplerSpec& spec,
                                      const Eigen::MatrixXd& G, long horizon,
                                      int trials, std::uint64_t seed,
                                      int threads = 1);

// Loewner (PSD-cone) comparison of symmetric matrices, with tolerance
// applied to the eigenvalues of the difference.
enum class LoewnerOrder { first_dominates, second_dominates, equal, incomparable };
LoewnerOrder loewner_compare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double tol);

// Validates symmetry (1e-10) and PSD-ness (eigenvalues >= -1e-8, relative to
// scale) of a covariance estimate; throws NumericalError otherwise.
void check_covariance(const Eigen::MatrixXd& sigma, const char* what);

// Non-backtracking walk lifted to the directed-edge space: state k is the
// directed edge tail(k) -> head(k). From (u, v) the walk moves uniformly to
// (v, w) over w in N(v) \ {u}; a degree-1 head forces the backtrack (v, u).
// The uniform law on directed edges is stationary, making the head-node
// marginal degree-proportional. pi is computed numerically and carried along.
struct EdgeChain {
  TransitionMatrix P;
  Distribution pi;
  std::vector<int> tail;  // per state
  std::vector<int> head;
};
EdgeChain nbrw_edge_chain(const Graph& g);

}  // namespace udsgd::markov
