#include "udsgd/communication.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "udsgd/errors.hpp"

namespace udsgd::comm {

namespace {
constexpr double kStochasticTol = 1e-12;

Eigen::MatrixXd uniform_matrix(int n) {
  return Eigen::MatrixXd::Constant(n, n, 1.0 / double(n));
}

// Spectral norm of a symmetric matrix.
double sym_spectral_norm(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue computation failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

const char* pattern_name(PatternKind k) {
  switch (k) {
    case PatternKind::full_average: return "full_average";
    case PatternKind::partial_participation: return "partial_participation";
    case PatternKind::decentralized_fixed: return "decentralized_fixed";
    case PatternKind::decentralized_time_varying:
      return "decentralized_time_varying";
  }
  return "?";
}

CommPattern full_average() { return CommPattern{}; }

CommPattern partial_participation(int k) {
  CommPattern p;
  p.kind = PatternKind::partial_participation;
  p.participation = k;
  return p;
}

CommPattern decentralized_fixed(Eigen::MatrixXd W) {
  CommPattern p;
  p.kind = PatternKind::decentralized_fixed;
  p.mixing.push_back(std::move(W));
  return p;
}

CommPattern decentralized_time_varying(std::vector<Eigen::MatrixXd> Ws) {
  CommPattern p;
  p.kind = PatternKind::decentralized_time_varying;
  p.mixing = std::move(Ws);
  return p;
}

void check_doubly_stochastic(const Eigen::MatrixXd& W, const char* what) {
  if (W.rows() != W.cols() || W.rows() < 1) {
    throw ValidationError(std::string(what) + ": matrix must be square");
  }
  if (W.minCoeff() < -kStochasticTol) {
    throw ValidationError(std::string(what) + ": negative mixing weight " +
                          std::to_string(W.minCoeff()));
  }
  const double row_err =
      (W.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double col_err =
      (W.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (row_err > kStochasticTol || col_err > kStochasticTol) {
    throw ValidationError(std::string(what) +
                          ": matrix is not doubly stochastic (row error " +
                          std::to_string(row_err) + ", column error " +
                          std::to_string(col_err) + ")");
  }
}

void validate_pattern(const CommPattern& pattern, int num_agents) {
  if (num_agents < 1) throw ValidationError("need at least one agent");
  switch (pattern.kind) {
    case PatternKind::full_average:
      return;
    case PatternKind::partial_participation:
      if (pattern.participation < 1 || pattern.participation > num_agents) {
        throw ValidationError(
            "partial_participation: participation must lie in [1, " +
            std::to_string(num_agents) + "], got " +
            std::to_string(pattern.participation));
      }
      return;
    case PatternKind::decentralized_fixed:
      if (pattern.mixing.size() != 1) {
        throw ValidationError(
            "decentralized_fixed: exactly one mixing matrix expected");
      }
      break;
    case PatternKind::decentralized_time_varying:
      if (pattern.mixing.empty()) {
        throw ValidationError(
            "decentralized_time_varying: at least one mixing matrix needed");
      }
      break;
  }
  for (const auto& W : pattern.mixing) {
    if (W.rows() != num_agents) {
      throw ValidationError("mixing matrix is " + std::to_string(W.rows()) +
                            "x" + std::to_string(W.cols()) + " but there are " +
                            std::to_string(num_agents) + " agents");
    }
    check_doubly_stochastic(W, "mixing matrix");
  }
}

Eigen::MatrixXd mh_matrix(const Graph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : g.neighbors(i)) {
      const double w = std::min(1.0 / double(g.degree(i)),
                                1.0 / double(g.degree(j)));
      W(i, j) = w;
      off += w;
    }
    W(i, i) = 1.0 - off;
  }
  check_doubly_stochastic(W, "mh_matrix");
  return W;
}

double second_eigenvalue_modulus(const Eigen::MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  if (es.info() != Eigen::Success) {
    throw NumericalError("second_eigenvalue_modulus: eigensolve failed");
  }
  Eigen::VectorXd mods = es.eigenvalues().cwiseAbs();
  std::sort(mods.data(), mods.data() + mods.size(),
            std::greater<double>());
  return mods.size() > 1 ? mods(1) : 0.0;
}

std::vector<int> draw_subset(int n, int k, Rng& rng) {
  if (k < 1 || k > n) {
    throw ValidationError("draw_subset: k must lie in [1, n]");
  }
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + rng.next_index(n - i);
    std::swap(pool[std::size_t(i)], pool[std::size_t(j)]);
  }
  std::vector<int> subset(pool.begin(), pool.begin() + k);
  std::sort(subset.begin(), subset.end());
  return subset;
}

ClientSamplingDraw draw_client_sampling(int num_agents, int k,
                                        const std::vector<int>& previous,
                                        Rng& rng) {
  if (int(previous.size()) != k) {
    throw ValidationError("draw_client_sampling: previous subset has size " +
                          std::to_string(previous.size()) + ", expected " +
                          std::to_string(k));
  }
  if (k < 1 || k > num_agents) {
    throw ValidationError("draw_client_sampling: k out of range");
  }
  for (std::size_t i = 0; i < previous.size(); ++i) {
    if (previous[i] < 0 || previous[i] >= num_agents ||
        (i > 0 && previous[i] <= previous[i - 1])) {
      throw ValidationError(
          "draw_client_sampling: previous subset must be sorted agent ids");
    }
  }

  const std::vector<int> fresh = draw_subset(num_agents, k, rng);

  // Order-preserving bijection sigma: previous -> fresh on the selected
  // block and complement -> complement elsewhere; T e_j = e_{sigma(j)}.
  std::vector<int> sigma(std::size_t(num_agents), -1);
  std::vector<char> in_prev(std::size_t(num_agents), 0);
  std::vector<char> in_fresh(std::size_t(num_agents), 0);
  for (int i : previous) in_prev[std::size_t(i)] = 1;
  for (int i : fresh) in_fresh[std::size_t(i)] = 1;
  for (int i = 0; i < k; ++i) {
    sigma[std::size_t(previous[std::size_t(i)])] = fresh[std::size_t(i)];
  }
  {
    std::vector<int> comp_prev, comp_fresh;
    for (int i = 0; i < num_agents; ++i) {
      if (!in_prev[std::size_t(i)]) comp_prev.push_back(i);
      if (!in_fresh[std::size_t(i)]) comp_fresh.push_back(i);
    }
    for (std::size_t i = 0; i < comp_prev.size(); ++i) {
      sigma[std::size_t(comp_prev[i])] = comp_fresh[i];
    }
  }

  // W = T * W_S: average the previous block, then route by sigma. Built
  // directly: row sigma(j) of W equals row j of W_S.
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(num_agents, num_agents);
  const double avg = 1.0 / double(k);
  for (int j = 0; j < num_agents; ++j) {
    const int target = sigma[std::size_t(j)];
    if (in_prev[std::size_t(j)]) {
      for (int i : previous) W(target, i) = avg;
    } else {
      W(target, j) = 1.0;
    }
  }
  return ClientSamplingDraw{std::move(W), fresh};
}

long IntervalSchedule::length(long l) const {
  if (l < 1) throw ValidationError("interval index must be >= 1");
  switch (kind) {
    case Kind::constant:
      return constant_K;
    case Kind::log_growth:
      return std::max(1L, long(std::ceil(std::log(double(l)))));
    case Kind::loglog_growth:
      if (l < 3) return 1;
      return std::max(1L, long(std::ceil(std::log(std::log(double(l))))));
  }
  return 1;
}

double StepSchedule::at(long tick) const {
  return gamma_star / std::pow(double(tick + 1), a);
}

void validate_step(const StepSchedule& s) {
  if (!(s.gamma_star > 0.0)) {
    throw ConfigError("step schedule: gamma_star must be positive");
  }
  if (!(s.a > 0.5) || s.a > 1.0) {
    throw ConfigError("step schedule: exponent a must lie in (0.5, 1], got " +
                      std::to_string(s.a));
  }
}

void validate_schedules(const StepSchedule& s, const IntervalSchedule& k) {
  validate_step(s);
  if (k.kind == IntervalSchedule::Kind::constant && k.constant_K < 1) {
    throw ConfigError("interval schedule: K must be >= 1");
  }
  if (k.growing() && s.a != 1.0) {
    throw ConfigError(
        "growing communication intervals require the step exponent a = 1 "
        "(slower steps cannot keep up with the interval growth)");
  }
}

AggregationTimes aggregation_times(const IntervalSchedule& schedule,
                                   long horizon) {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  AggregationTimes out;
  out.horizon = horizon;
  long acc = 0;
  for (long l = 1; acc < horizon; ++l) {
    acc += schedule.length(l);
    out.times.push_back(acc);  // the final entry may exceed the horizon
  }
  return out;
}

long AggregationTimes::tau(long n) const {
  if (n < 1 || n > horizon) {
    throw ValidationError("tau(n) is defined for 1 <= n <= horizon");
  }
  const auto it = std::lower_bound(times.begin(), times.end(), n);
  return long(it - times.begin()) + 1;
}

long AggregationTimes::block_length(long n) const {
  const long l = tau(n);
  const long prev = (l >= 2) ? times[std::size_t(l - 2)] : 0;
  return times[std::size_t(l - 1)] - prev;
}

ScheduleDiagnostics schedule_diagnostics(const StepSchedule& step,
                                         const IntervalSchedule& interval,
                                         long horizon, int L) {
  validate_schedules(step, interval);
  if (L < 0) throw ValidationError("network delay exponent L must be >= 0");
  if (horizon < 4) throw ValidationError("horizon too short for diagnostics");

  const AggregationTimes agg = aggregation_times(interval, horizon);
  const double power = double(L + 1);
  const double growth_exponent = 1.0 / (2.0 * power);

  ScheduleDiagnostics out;
  double tail_sum = 0.0;
  const long half = horizon / 2;

  // Walk blocks instead of calling tau(n) per step.
  std::size_t block = 0;
  double K_pow = std::pow(double(agg.block_length(1)), power);
  double K_cur = double(agg.block_length(1));
  for (long n = 1; n <= horizon; ++n) {
    if (block < agg.times.size() && n > agg.times[block]) {
      ++block;
      const long prev = block >= 1 ? agg.times[block - 1] : 0;
      const long next = block < agg.times.size()
                            ? agg.times[block]
                            : prev + interval.length(long(block) + 1);
      K_cur = double(next - prev);
      K_pow = std::pow(K_cur, power);
    }
    const double gamma = step.at(n - 1);  // gamma_n
    const double eta = gamma * K_pow;
    const double eta2 = eta * eta;
    out.eta2_sum += eta2;
    if (n > half) tail_sum += eta2;
    const double growth = K_cur * std::pow(gamma, growth_exponent);
    if (n <= half) {
      out.max_growth_first = std::max(out.max_growth_first, growth);
    } else {
      out.max_growth_second = std::max(out.max_growth_second, growth);
    }
  }
  out.eta2_tail_fraction = tail_sum / out.eta2_sum;

  // Boundary-to-boundary eta ratio for the last two boundaries inside the
  // window; the admissible schedules drive it to one.
  std::vector<long> inside;
  for (long t : agg.times) {
    if (t + 1 <= horizon) inside.push_back(t);
  }
  if (inside.size() >= 2) {
    const long nl_prev = inside[inside.size() - 2];
    const long nl_last = inside[inside.size() - 1];
    const double eta_a =
        step.at(nl_prev) *
        std::pow(double(agg.block_length(nl_prev + 1)), power);
    const double eta_b =
        step.at(nl_last) *
        std::pow(double(agg.block_length(nl_last + 1)), power);
    out.last_boundary_ratio = eta_a / eta_b;
  }

  out.eta2_converging = out.eta2_tail_fraction < 0.5;
  out.boundary_ratio_ok = std::abs(out.last_boundary_ratio - 1.0) <= 0.1;
  out.growth_ok = out.max_growth_second <= out.max_growth_first * (1.0 + 1e-9);
  return out;
}

ContractionReport verify_contraction(const CommPattern& pattern,
                                     int num_agents, int draws,
                                     std::uint64_t seed) {
  validate_pattern(pattern, num_agents);
  const Eigen::MatrixXd J = uniform_matrix(num_agents);
  ContractionReport out;

  switch (pattern.kind) {
    case PatternKind::full_average: {
      out.value = sym_spectral_norm(J.transpose() * J - J);
      out.draws_used = 1;
      break;
    }
    case PatternKind::decentralized_fixed: {
      const Eigen::MatrixXd& W = pattern.mixing[0];
      out.value = sym_spectral_norm(W.transpose() * W - J);
      out.draws_used = 1;
      break;
    }
    case PatternKind::decentralized_time_varying: {
      // Uniform choice from a finite pool: the expectation is exact.
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(num_agents, num_agents);
      for (const auto& W : pattern.mixing) E += W.transpose() * W;
      E /= double(pattern.mixing.size());
      out.value = sym_spectral_norm(E - J);
      out.draws_used = int(pattern.mixing.size());
      break;
    }
    case PatternKind::partial_participation: {
      if (draws < 1) {
        throw ValidationError("verify_contraction: need at least one draw");
      }
      Rng rng(derive_seed(seed, 0x636f6e74 /* "cont" */));
      std::vector<int> selected =
          draw_subset(num_agents, pattern.participation, rng);
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(num_agents, num_agents);
      for (int r = 0; r < draws; ++r) {
        auto draw =
            draw_client_sampling(num_agents, pattern.participation, selected,
                                 rng);
        E += draw.W.transpose() * draw.W;
        selected = std::move(draw.selected);
      }
      E /= double(draws);
      out.value = sym_spectral_norm(0.5 * (E + E.transpose()) - J);
      out.draws_used = draws;
      break;
    }
  }
  // A value within rounding noise of 1 must not pass as contracting.
  out.contracting = out.value < 1.0 - 1e-9;
  return out;
}

}  // namespace udsgd::comm
