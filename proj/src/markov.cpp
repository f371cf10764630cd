#include "udsgd/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "udsgd/errors.hpp"
#include "udsgd/parallel.hpp"
#include "udsgd/rng.hpp"
#include "udsgd/sampling.hpp"

namespace udsgd::markov {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kBalanceTol = 1e-10;
constexpr double kResidualTol = 1e-10;

// Support digraph reachability (forward or transposed).
int reachable_count(const Eigen::MatrixXd& P, bool transpose) {
  const int n = int(P.rows());
  std::vector<char> seen(std::size_t(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < n; ++v) {
      const double p = transpose ? P(v, u) : P(u, v);
      if (p > 0.0 && !seen[std::size_t(v)]) {
        seen[std::size_t(v)] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count;
}

}  // namespace

TransitionMatrix TransitionMatrix::checked(Eigen::MatrixXd P) {
  if (P.rows() != P.cols() || P.rows() < 1) {
    throw ValidationError("transition matrix must be square and non-empty");
  }
  for (int i = 0; i < P.rows(); ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < P.cols(); ++j) {
      if (P(i, j) < 0.0) {
        throw ValidationError("transition matrix has a negative entry at (" +
                              std::to_string(i) + ", " + std::to_string(j) +
                              ")");
      }
      row_sum += P(i, j);
    }
    if (std::abs(row_sum - 1.0) > kRowSumTol) {
      throw ValidationError("transition matrix row " + std::to_string(i) +
                            " sums to " + std::to_string(row_sum) +
                            ", expected 1");
    }
  }
  return TransitionMatrix(std::move(P));
}

bool TransitionMatrix::is_irreducible() const {
  const int n = size();
  return reachable_count(P_, false) == n && reachable_count(P_, true) == n;
}

int TransitionMatrix::period() const {
  // BFS-depth gcd: for an irreducible support digraph the period is
  // gcd over support edges (u, v) of depth(u) + 1 - depth(v).
  const int n = size();
  std::vector<int> depth(std::size_t(n), -1);
  std::vector<int> queue{0};
  depth[0] = 0;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int u = queue[qi];
    for (int v = 0; v < n; ++v) {
      if (P_(u, v) > 0.0 && depth[std::size_t(v)] < 0) {
        depth[std::size_t(v)] = depth[std::size_t(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  long g = 0;
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (P_(u, v) > 0.0 && depth[std::size_t(u)] >= 0 &&
          depth[std::size_t(v)] >= 0) {
        g = std::gcd(g, long(depth[std::size_t(u)]) + 1 - depth[std::size_t(v)]);
      }
    }
  }
  return int(g < 0 ? -g : g);
}

bool TransitionMatrix::is_ergodic() const {
  return is_irreducible() && period() == 1;
}

void TransitionMatrix::require_irreducible(const char* caller) const {
  if (!is_irreducible()) {
    throw ValidationError(std::string(caller) +
                          ": chain is not irreducible (hence not ergodic)");
  }
}

void TransitionMatrix::require_ergodic(const char* caller) const {
  require_irreducible(caller);
  const int p = period();
  if (p != 1) {
    throw ValidationError(std::string(caller) + ": chain is periodic (period " +
                          std::to_string(p) +
                          "); long-run covariance analysis needs an aperiodic "
                          "chain");
  }
}

Distribution Distribution::checked(Eigen::VectorXd pi) {
  if (pi.size() < 1) throw ValidationError("distribution must be non-empty");
  double sum = 0.0;
  for (int i = 0; i < pi.size(); ++i) {
    if (pi(i) < 0.0) {
      throw ValidationError("distribution has a negative mass at index " +
                            std::to_string(i));
    }
    sum += pi(i);
  }
  if (std::abs(sum - 1.0) > kRowSumTol) {
    throw ValidationError("distribution sums to " + std::to_string(sum) +
                          ", expected 1");
  }
  return Distribution(std::move(pi));
}

TransitionMatrix srw_kernel(const Graph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int u = 0; u < n; ++u) {
    const double p = 1.0 / double(g.degree(u));
    for (int v : g.neighbors(u)) P(u, v) = p;
  }
  return TransitionMatrix::checked(std::move(P));
}

Distribution degree_distribution(const Graph& g) {
  const int n = g.node_count();
  Eigen::VectorXd pi(n);
  const double total = double(g.degree_total());
  for (int v = 0; v < n; ++v) pi(v) = double(g.degree(v)) / total;
  return Distribution::checked(std::move(pi));
}

Distribution stationary(const TransitionMatrix& P) {
  P.require_irreducible("stationary");
  const int n = P.size();
  const Eigen::MatrixXd& M = P.mat();

  // Balance system (I - P^T) pi = 0 with the last equation replaced by the
  // normalization sum(pi) = 1.
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - M.transpose();
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd pi = A.partialPivLu().solve(b);

  auto balance_residual = [&M](const Eigen::VectorXd& v) {
    return (M.transpose() * v - v).lpNorm<Eigen::Infinity>();
  };

  bool ok = pi.allFinite() && pi.minCoeff() > -kBalanceTol &&
            balance_residual(pi) <= kBalanceTol;
  if (!ok) {
    // Damped power iteration on (P + I)/2: same fixed point, aperiodic by
    // construction, so it converges for any irreducible chain.
    pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int it = 0; it < 2000000; ++it) {
      Eigen::VectorXd next = 0.5 * (M.transpose() * pi + pi);
      next /= next.sum();
      const double delta = (next - pi).lpNorm<Eigen::Infinity>();
      pi = std::move(next);
      if (delta < 1e-15) break;
    }
    if (balance_residual(pi) > kBalanceTol) {
      throw NumericalError("stationary: balance residual " +
                           std::to_string(balance_residual(pi)) +
                           " exceeds 1e-10 after fallback iteration");
    }
  }
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return Distribution::checked(std::move(pi));
}

Eigen::MatrixXd fundamental_matrix(const TransitionMatrix& P,
                                   const Distribution& pi) {
  P.require_irreducible("fundamental_matrix");
  if (pi.size() != P.size()) {
    throw ValidationError("fundamental_matrix: dimension mismatch");
  }
  const int n = P.size();
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - P.mat() +
                            Eigen::VectorXd::Ones(n) * pi.vec().transpose();
  const Eigen::MatrixXd Z = A.partialPivLu().solve(
      Eigen::MatrixXd::Identity(n, n));
  const double residual =
      (A * Z - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!Z.allFinite() || residual > kResidualTol) {
    throw NumericalError(
        "fundamental_matrix: inversion residual " + std::to_string(residual) +
        " exceeds 1e-10; the chain is too close to singular");
  }
  return Z;
}

Eigen::MatrixXd poisson_solution(const TransitionMatrix& P,
                                 const Distribution& pi,
                                 const Eigen::MatrixXd& G) {
  if (G.rows() != P.size()) {
    throw ValidationError("poisson_solution: G must have one row per state");
  }
  const Eigen::MatrixXd Z = fundamental_matrix(P, pi);
  const Eigen::RowVectorXd mu = pi.vec().transpose() * G;
  return Z * (G.rowwise() - mu);
}

void check_covariance(const Eigen::MatrixXd& sigma, const char* what) {
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw NumericalError(std::string(what) + ": covariance asymmetry " +
                         std::to_string(asym) + " exceeds tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  if (es.info() != Eigen::Success) {
    throw NumericalError(std::string(what) +
                         ": eigenvalue computation failed");
  }
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -1e-8 * scale) {
    throw NumericalError(std::string(what) + ": covariance eigenvalue " +
                         std::to_string(lo) + " is significantly negative");
  }
}

Eigen::MatrixXd asymptotic_covariance(const TransitionMatrix& P,
                                      const Distribution& pi,
                                      const Eigen::MatrixXd& G) {
  P.require_ergodic("asymptotic_covariance");
  if (G.rows() != P.size() || pi.size() != P.size()) {
    throw ValidationError("asymptotic_covariance: dimension mismatch");
  }
  const Eigen::MatrixXd Z = fundamental_matrix(P, pi);
  const Eigen::RowVectorXd mu = pi.vec().transpose() * G;
  const Eigen::MatrixXd Gc = G.rowwise() - mu;
  const Eigen::MatrixXd D = pi.vec().asDiagonal();
  const Eigen::MatrixXd core = D * Z + Z.transpose() * D - D;
  Eigen::MatrixXd sigma = Gc.transpose() * core * Gc;
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  check_covariance(sigma, "asymptotic_covariance");
  return sigma;
}

SeriesCovariance asymptotic_covariance_series(const TransitionMatrix& P,
                                              const Distribution& pi,
                                              const Eigen::MatrixXd& G,
                                              int k_max) {
  P.require_ergodic("asymptotic_covariance_series");
  if (G.rows() != P.size() || pi.size() != P.size()) {
    throw ValidationError("asymptotic_covariance_series: dimension mismatch");
  }
  if (k_max < 0) {
    throw ValidationError("asymptotic_covariance_series: k_max must be >= 0");
  }
  const Eigen::RowVectorXd mu = pi.vec().transpose() * G;
  const Eigen::MatrixXd Gc = G.rowwise() - mu;
  const Eigen::MatrixXd D = pi.vec().asDiagonal();
  const Eigen::MatrixXd GtD = Gc.transpose() * D;

  SeriesCovariance out;
  out.sigma = GtD * Gc;  // lag-0 term Cov_pi(G)
  out.increment_norms.reserve(std::size_t(k_max));
  // Centered rows make P^k Gc equal (P^k - 1 pi^T) Gc, so iterating the
  // plain kernel on Gc walks the autocovariance lags directly.
  Eigen::MatrixXd Mk = Gc;
  for (int k = 1; k <= k_max; ++k) {
    Mk = P.mat() * Mk;
    const Eigen::MatrixXd term = GtD * Mk;
    const Eigen::MatrixXd sym = term + term.transpose();
    out.sigma += sym;
    out.increment_norms.push_back(sym.norm());
  }
  out.sigma = (0.5 * (out.sigma + out.sigma.transpose())).eval();
  return out;
}

namespace {

// Shared Monte-Carlo estimator: `make_source(trial)` yields a functor that
// emits one state index per call; time-average rows of G per trial, then
// n * sample covariance across trials.
template <class MakeSource>
McCovariance mc_covariance(const Eigen::MatrixXd& G, long horizon, int trials,
                           int threads, MakeSource&& make_source) {
  if (horizon < 1000) {
    throw ValidationError(
        "asymptotic_covariance_mc: horizon must be >= 1000 for a usable "
        "estimate");
  }
  if (trials < 50) {
    throw ValidationError("asymptotic_covariance_mc: need at least 50 trials");
  }
  const int d = int(G.cols());
  Eigen::MatrixXd means(trials, d);
  parallel_trials(trials, threads, [&](int trial) {
    auto source = make_source(trial);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (long s = 0; s < horizon; ++s) sum += G.row(source()).transpose();
    means.row(trial) = sum.transpose() / double(horizon);
  });

  const Eigen::RowVectorXd mbar = means.colwise().mean();
  const Eigen::MatrixXd centered = means.rowwise() - mbar;
  McCovariance out;
  out.estimate = double(horizon) * (centered.transpose() * centered) /
                 double(trials - 1);
  out.standard_error.resize(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double s =
          out.estimate(i, i) * out.estimate(j, j) +
          out.estimate(i, j) * out.estimate(i, j);
      out.standard_error(i, j) = std::sqrt(std::max(0.0, s) / (trials - 1));
    }
  }
  return out;
}

// Categorical draw from a length-n cumulative-probability array
// (nondecreasing, last entry ~= 1).
inline int draw_from_cumulative(const double* cum, int n, double u) {
  const double* it = std::upper_bound(cum, cum + n - 1, u);
  return int(it - cum);
}

}  // namespace

McCovariance asymptotic_covariance_mc(const TransitionMatrix& P,
                                      const Eigen::MatrixXd& G, long horizon,
                                      int trials, std::uint64_t seed,
                                      int threads) {
  if (G.rows() != P.size()) {
    throw ValidationError("asymptotic_covariance_mc: G/state count mismatch");
  }
  const int n = P.size();
  const Distribution pi = stationary(P);

  // Flattened row-major cumulative rows, shared read-only across trials.
  std::vector<double> cum_rows(std::size_t(n) * std::size_t(n));
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      acc += P.mat()(i, j);
      cum_rows[std::size_t(i) * std::size_t(n) + std::size_t(j)] = acc;
    }
  }
  std::vector<double> cum_pi(static_cast<std::size_t>(n));
  {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += pi.vec()(i);
      cum_pi[std::size_t(i)] = acc;
    }
  }

  const double* rows = cum_rows.data();
  return mc_covariance(G, horizon, trials, threads, [&, rows](int trial) {
    Rng rng(derive_seed(seed, 0x6d632d63 /* "mc-c" */, std::uint64_t(trial)));
    int state = draw_from_cumulative(cum_pi.data(), n, rng.next_unit());
    bool first = true;
    return [rows, n, rng, state, first]() mutable -> int {
      if (first) {
        first = false;
        return state;
      }
      state = draw_from_cumulative(rows + std::size_t(state) * std::size_t(n),
                                   n, rng.next_unit());
      return state;
    };
  });
}

McCovariance asymptotic_covariance_mc(const sampling::SamplerSpec& spec,
                                      const Eigen::MatrixXd& G, long horizon,
                                      int trials, std::uint64_t seed,
                                      int threads) {
  sampling::validate_spec(spec, int(G.rows()));
  return mc_covariance(G, horizon, trials, threads, [&](int trial) {
    auto sampler = std::make_shared<sampling::Sampler>(
        spec, int(G.rows()),
        derive_seed(seed, 0x6d632d73 /* "mc-s" */, std::uint64_t(trial)));
    return [sampler]() -> int { return sampler->next(); };
  });
}

LoewnerOrder loewner_compare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                             double tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols()) {
    throw ValidationError("loewner_compare: need square matrices of one size");
  }
  Eigen::MatrixXd diff = a - b;
  diff = 0.5 * (diff + diff.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff);
  if (es.info() != Eigen::Success) {
    throw NumericalError("loewner_compare: eigenvalue computation failed");
  }
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo >= -tol && hi <= tol) return LoewnerOrder::equal;
  if (lo >= -tol) return LoewnerOrder::first_dominates;
  if (hi <= tol) return LoewnerOrder::second_dominates;
  return LoewnerOrder::incomparable;
}

EdgeChain nbrw_edge_chain(const Graph& g) {
  const int n = g.node_count();
  std::vector<int> tail, head;
  // Directed-edge ids in (tail, head) lexicographic order.
  Eigen::MatrixXi edge_id = Eigen::MatrixXi::Constant(n, n, -1);
  for (int u = 0; u < n; ++u) {
    for (int v : g.neighbors(u)) {
      edge_id(u, v) = int(tail.size());
      tail.push_back(u);
      head.push_back(v);
    }
  }
  const int m = int(tail.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, m);
  for (int e = 0; e < m; ++e) {
    const int u = tail[std::size_t(e)];
    const int v = head[std::size_t(e)];
    const int dv = g.degree(v);
    if (dv == 1) {
      P(e, edge_id(v, u)) = 1.0;  // dead end: forced backtrack
      continue;
    }
    const double p = 1.0 / double(dv - 1);
    for (int w : g.neighbors(v)) {
      if (w == u) continue;
      P(e, edge_id(v, w)) = p;
    }
  }
  EdgeChain chain{TransitionMatrix::checked(std::move(P)),
                  Distribution::checked(
                      Eigen::VectorXd::Constant(m, 1.0 / double(m))),
                  std::move(tail), std::move(head)};
  // The uniform edge law is stationary by a counting argument; recompute
  // numerically when possible so the struct is honest even on graphs where
  // the lifted chain is reducible (callers needing covariance will fail
  // later with a clear message).
  if (chain.P.is_irreducible()) {
    chain.pi = stationary(chain.P);
  }
  return chain;
}

}  // namespace udsgd::markov
