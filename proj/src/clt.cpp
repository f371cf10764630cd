#include "udsgd/clt.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "udsgd/errors.hpp"
#include "udsgd/rng.hpp"

namespace udsgd::clt {

namespace {

void require_symmetric(const Eigen::MatrixXd& A, const char* what) {
  if (A.rows() != A.cols()) {
    throw ValidationError(std::string(what) + " must be square");
  }
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ValidationError(std::string(what) + " must be symmetric");
  }
}

// Largest eigenvalue real part; general (possibly non-normal) M.
double max_real_eigenvalue(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue computation failed on the drift matrix");
  }
  return es.eigenvalues().real().maxCoeff();
}

void require_hurwitz(const Eigen::MatrixXd& M, const char* caller) {
  const double top = max_real_eigenvalue(M);
  if (!(top < 0.0)) {
    throw NumericalError(std::string(caller) +
                         ": drift matrix is not Hurwitz (an eigenvalue has "
                         "real part " +
                         std::to_string(top) + " >= 0)");
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) {
  return 0.5 * (A + A.transpose());
}

void check_lyapunov_residual(const Eigen::MatrixXd& M, const Eigen::MatrixXd& U,
                             const Eigen::MatrixXd& V) {
  const double residual = (M * V + V * M.transpose() + U).norm();
  const double budget = 1e-9 * std::max(1.0, U.norm());
  if (!(residual <= budget)) {
    throw NumericalError("lyapunov_solve: residual " +
                         std::to_string(residual) + " exceeds " +
                         std::to_string(budget));
  }
}

}  // namespace

Eigen::MatrixXd weighted_gradient_table(const problems::Problem& problem,
                                        int agent,
                                        const Eigen::VectorXd& theta_star,
                                        const sampling::SamplerSpec& spec) {
  if (agent < 0 || agent >= problem.agent_count()) {
    throw ValidationError("agent index out of range");
  }
  const int B = problem.agent_data_size(agent);
  sampling::validate_spec(spec, B);
  const Eigen::VectorXd w = sampling::stationary_weights(spec, B);

  Eigen::MatrixXd G(B, problem.dim());
  Eigen::VectorXd g(problem.dim());
  for (int x = 0; x < B; ++x) {
    problem.sample_grad(agent, theta_star, x, g);
    G.row(x) = w(x) * g.transpose();
  }
  return G;
}

bool closed_form_available(const sampling::SamplerSpec& spec,
                           int dataset_size) {
  sampling::validate_spec(spec, dataset_size);
  switch (spec.kind) {
    case sampling::Kind::iid:
      return true;
    case sampling::Kind::shuffle:
    case sampling::Kind::srrw:
      return false;
    case sampling::Kind::srw:
      return markov::srw_kernel(*spec.graph).is_ergodic();
    case sampling::Kind::nbrw:
      return markov::nbrw_edge_chain(*spec.graph).P.is_ergodic();
  }
  return false;
}

Eigen::MatrixXd agent_U(const sampling::SamplerSpec& spec,
                        const problems::Problem& problem, int agent,
                        const Eigen::VectorXd& theta_star) {
  const int B = problem.agent_data_size(agent);
  sampling::validate_spec(spec, B);

  if (spec.kind == sampling::Kind::shuffle ||
      spec.kind == sampling::Kind::srrw) {
    throw ValidationError(
        std::string(sampling::kind_name(spec.kind)) +
        " has no fixed transition kernel; estimate U_i with agent_U_mc");
  }

  const Eigen::MatrixXd G = weighted_gradient_table(problem, agent,
                                                    theta_star, spec);

  if (spec.kind == sampling::Kind::iid) {
    const Eigen::VectorXd uniform =
        Eigen::VectorXd::Constant(B, 1.0 / double(B));
    const auto P = markov::TransitionMatrix::checked(
        Eigen::MatrixXd::Ones(B, 1) * uniform.transpose());
    return markov::asymptotic_covariance(
        P, markov::Distribution::checked(uniform), G);
  }

  if (spec.kind == sampling::Kind::srw) {
    const auto P = markov::srw_kernel(*spec.graph);
    if (!P.is_ergodic()) {
      throw ValidationError(
          "the simple random walk on this agent graph is not ergodic "
          "(bipartite graph?); estimate U_i with agent_U_mc");
    }
    return markov::asymptotic_covariance(
        P, markov::degree_distribution(*spec.graph), G);
  }

  // nbrw: covariance on the directed-edge lift, with the test function
  // reading only the head node of each edge state.
  const markov::EdgeChain chain = markov::nbrw_edge_chain(*spec.graph);
  if (!chain.P.is_ergodic()) {
    throw ValidationError(
        "the non-backtracking walk's edge chain on this agent graph is not "
        "ergodic (needs overlapping cycle lengths); estimate U_i with "
        "agent_U_mc");
  }
  Eigen::MatrixXd G_edge(int(chain.head.size()), problem.dim());
  for (std::size_t k = 0; k < chain.head.size(); ++k) {
    G_edge.row(long(k)) = G.row(chain.head[k]);
  }
  return markov::asymptotic_covariance(chain.P, chain.pi, G_edge);
}

markov::McCovariance agent_U_mc(const sampling::SamplerSpec& spec,
                                const problems::Problem& problem, int agent,
                                const Eigen::VectorXd& theta_star,
                                const McOptions& opts) {
  const Eigen::MatrixXd G = weighted_gradient_table(problem, agent,
                                                    theta_star, spec);
  return markov::asymptotic_covariance_mc(spec, G, opts.horizon, opts.trials,
                                          opts.seed, opts.threads);
}

Eigen::MatrixXd system_U(const std::vector<Eigen::MatrixXd>& agent_Us) {
  if (agent_Us.empty()) {
    throw ValidationError("system_U: need at least one agent");
  }
  const long d = agent_Us.front().rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (const auto& Ui : agent_Us) {
    if (Ui.rows() != d || Ui.cols() != d) {
      throw ValidationError("system_U: agent covariance dimensions differ");
    }
    sum += Ui;
  }
  const double N = double(agent_Us.size());
  return sum / (N * N);
}

Eigen::MatrixXd drift_matrix(const Eigen::MatrixXd& H,
                             const comm::StepSchedule& step) {
  require_symmetric(H, "hessian");
  comm::validate_step(step);
  const int d = int(H.rows());

  Eigen::MatrixXd M;
  if (step.a < 1.0) {
    M = -H;
  } else {
    M = Eigen::MatrixXd::Identity(d, d) / (2.0 * step.gamma_star) - H;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) {
    throw NumericalError("drift_matrix: eigensolve failed");
  }
  const double top = es.eigenvalues().maxCoeff();
  if (!(top < 0.0)) {
    const double mu = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H)
                          .eigenvalues()
                          .minCoeff();
    std::string msg = "drift matrix is not Hurwitz: top eigenvalue " +
                      std::to_string(top) + " >= 0";
    if (step.a == 1.0) {
      msg += " (a = 1 needs gamma_star > 1/(2 mu) = " +
             std::to_string(1.0 / (2.0 * mu)) + ", got " +
             std::to_string(step.gamma_star) + ")";
    } else {
      msg += " (the Hessian must be positive definite; lambda_min = " +
             std::to_string(-top) + ")";
    }
    throw ConfigError(msg);
  }
  return M;
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& M,
                               const Eigen::MatrixXd& U,
                               LyapunovMethod method) {
  require_symmetric(U, "noise covariance");
  if (M.rows() != M.cols() || M.rows() != U.rows()) {
    throw ValidationError("lyapunov_solve: dimension mismatch");
  }
  require_hurwitz(M, "lyapunov_solve");
  const int d = int(M.rows());

  const double m_scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const bool m_symmetric =
      (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m_scale;
  if (method == LyapunovMethod::automatic) {
    method = m_symmetric ? LyapunovMethod::spectral : LyapunovMethod::kronecker;
  }

  Eigen::MatrixXd V(d, d);
  if (method == LyapunovMethod::spectral) {
    if (!m_symmetric) {
      throw ValidationError(
          "lyapunov_solve: the spectral method needs a symmetric drift "
          "matrix");
    }
    // M = Q L Q'; in that basis the equation decouples entrywise:
    // V'_ij = -U'_ij / (l_i + l_j).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) {
      throw NumericalError("lyapunov_solve: eigensolve failed");
    }
    const Eigen::MatrixXd& Q = es.eigenvectors();
    const Eigen::VectorXd& lambda = es.eigenvalues();
    Eigen::MatrixXd Up = Q.transpose() * U * Q;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        Up(i, j) = -Up(i, j) / (lambda(i) + lambda(j));
      }
    }
    V = Q * Up * Q.transpose();
  } else {
    if (d > 128) {
      throw NumericalError(
          "lyapunov_solve: the dense kronecker system is capped at dimension "
          "128; use a symmetric drift matrix (spectral method) beyond that");
    }
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd A =
        Eigen::kroneckerProduct(I, M).eval() +
        Eigen::kroneckerProduct(M, I).eval();
    const Eigen::Map<const Eigen::VectorXd> u(U.data(), long(d) * d);
    const Eigen::VectorXd v = A.partialPivLu().solve(-u);
    V = Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d);
  }

  V = symmetrized(V);
  check_lyapunov_residual(M, U, V);
  return V;
}

Eigen::MatrixXd integral_check(const Eigen::MatrixXd& M,
                               const Eigen::MatrixXd& U, double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) {
    throw ValidationError("integral_check: T and dt must be positive");
  }
  const long steps = std::max(1L, std::lround(T / dt));
  const double h = T / double(steps);
  const Eigen::MatrixXd E = (M * h).exp();

  // trapezoid: endpoints at half weight; e^{M k h} accumulated by one
  // multiply per step.
  Eigen::MatrixXd sum = 0.5 * U;  // t = 0 term
  Eigen::MatrixXd cur = Eigen::MatrixXd::Identity(M.rows(), M.cols());
  for (long k = 1; k <= steps; ++k) {
    cur = (cur * E).eval();
    const Eigen::MatrixXd term = cur * U * cur.transpose();
    sum += (k == steps) ? 0.5 * term : term;
  }
  return symmetrized(sum * h);
}

Eigen::MatrixXd integral_covariance(const Eigen::MatrixXd& M,
                                    const Eigen::MatrixXd& U) {
  require_hurwitz(M, "integral_covariance");

  // Base panel sized to the drift's own time scale, resolved finely enough
  // that the trapezoid bias sits well under the 1e-6 agreement budget.
  const double T0 = 1.0 / std::max(1.0, M.norm());
  const long panel_steps = 4096;
  Eigen::MatrixXd V = integral_check(M, U, T0, T0 / double(panel_steps));

  // Exact interval doubling: the tail integral over [T, 2T] is the base
  // integral conjugated by the propagator e^{MT}.
  Eigen::MatrixXd E = (M * T0).exp();
  for (int doubling = 0; doubling < 96; ++doubling) {
    if (E.norm() < 1e-8) {
      return symmetrized(V);
    }
    V = V + E * V * E.transpose();
    E = (E * E).eval();
  }
  throw NumericalError(
      "integral_covariance: the propagator would not decay; the drift "
      "matrix is too close to singular");
}

Eigen::MatrixXd pr_covariance(const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& U) {
  require_symmetric(H, "hessian");
  require_symmetric(U, "noise covariance");
  if (H.rows() != U.rows()) {
    throw ValidationError("pr_covariance: dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) {
    throw ValidationError(
        "pr_covariance: the Hessian must be positive definite");
  }
  const Eigen::MatrixXd HinvU = llt.solve(U);
  return symmetrized(llt.solve(HinvU.transpose()));
}

double predicted_mse(const Eigen::MatrixXd& V, const comm::StepSchedule& step,
                     long n) {
  if (n < 1) throw ValidationError("predicted_mse: n must be >= 1");
  return step.at(n - 1) * V.trace();
}

CovarianceReport predict(const problems::Problem& problem,
                         const problems::Optimum& opt,
                         const std::vector<sampling::SamplerSpec>& specs,
                         const comm::StepSchedule& step, const McOptions& mc) {
  const int N = problem.agent_count();
  if (int(specs.size()) != N) {
    throw ValidationError("predict: " + std::to_string(specs.size()) +
                          " sampler specs for " + std::to_string(N) +
                          " agents");
  }

  CovarianceReport report;
  report.step = step;
  report.H = opt.hessian;
  report.mu = opt.mu;

  report.agent_U.reserve(std::size_t(N));
  report.agent_used_mc.assign(std::size_t(N), 0);
  for (int a = 0; a < N; ++a) {
    const auto& spec = specs[std::size_t(a)];
    if (closed_form_available(spec, problem.agent_data_size(a))) {
      report.agent_U.push_back(agent_U(spec, problem, a, opt.theta));
    } else {
      McOptions agent_mc = mc;
      agent_mc.seed = derive_seed(mc.seed, 0x636c7455 /* "clU" */,
                                  std::uint64_t(a));
      report.agent_U.push_back(
          agent_U_mc(spec, problem, a, opt.theta, agent_mc).estimate);
      report.agent_used_mc[std::size_t(a)] = 1;
    }
  }

  report.U = system_U(report.agent_U);
  report.M = drift_matrix(report.H, step);
  report.V = lyapunov_solve(report.M, report.U);
  report.V_prime = pr_covariance(report.H, report.U);
  report.trace_V = report.V.trace();
  report.trace_V_prime = report.V_prime.trace();
  return report;
}

Comparison compare(const CovarianceReport& report,
                   const std::vector<EnsemblePoint>& mse_curve,
                   const Eigen::MatrixXd& scaled_covariance) {
  Comparison out;
  out.checkpoints.reserve(mse_curve.size());
  for (const auto& point : mse_curve) {
    CheckpointComparison row;
    row.n = point.n;
    row.predicted = predicted_mse(report.V, report.step, point.n);
    row.empirical = point.mse;
    row.ratio = row.predicted > 0.0 ? row.empirical / row.predicted : 0.0;
    out.checkpoints.push_back(row);
  }

  out.trace_predicted = report.trace_V;
  if (scaled_covariance.size() > 0) {
    if (scaled_covariance.rows() != report.V.rows()) {
      throw ValidationError("compare: covariance dimension mismatch");
    }
    out.trace_empirical = scaled_covariance.trace();
    out.trace_ratio = out.trace_predicted > 0.0
                          ? out.trace_empirical / out.trace_predicted
                          : 0.0;
    out.max_entry_gap =
        (report.V - scaled_covariance).cwiseAbs().maxCoeff();
  }
  return out;
}

const char* loewner_name(markov::LoewnerOrder order) {
  switch (order) {
    case markov::LoewnerOrder::first_dominates: return "first_dominates";
    case markov::LoewnerOrder::second_dominates: return "second_dominates";
    case markov::LoewnerOrder::equal: return "equal";
    case markov::LoewnerOrder::incomparable: return "incomparable";
  }
  return "?";
}

}  // namespace udsgd::clt
