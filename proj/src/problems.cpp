#include "udsgd/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "udsgd/errors.hpp"
#include "udsgd/rng.hpp"

namespace udsgd::problems {

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw ValidationError("libsvm parse error on line " +
                        std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& token, std::size_t line_no,
                    const char* what) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;  // from_chars rejects '+1'
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    parse_fail(line_no, std::string("bad ") + what + " '" + token + "'");
  }
  return value;
}

}  // namespace

Dataset parse_libsvm(const std::string& text) {
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::vector<int> labels;
  int max_index = 0;

  std::istringstream lines(text);
  std::string line;
  for (std::size_t line_no = 1; std::getline(lines, line); ++line_no) {
    std::istringstream tokens(line);
    std::string token;
    if (!(tokens >> token)) continue;  // blank line

    labels.push_back(parse_double(token, line_no, "label") > 0.0 ? 1 : 0);
    rows.emplace_back();
    auto& row = rows.back();

    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || colon == 0 ||
          colon + 1 == token.size()) {
        parse_fail(line_no, "expected idx:value, got '" + token + "'");
      }
      int index = 0;
      const char* begin = token.data();
      const auto [ptr, ec] = std::from_chars(begin, begin + colon, index);
      if (ec != std::errc() || ptr != begin + colon || index < 1) {
        parse_fail(line_no, "feature index must be a positive integer in '" +
                                token + "'");
      }
      const double value =
          parse_double(token.substr(colon + 1), line_no, "feature value");
      const bool duplicate =
          std::any_of(row.begin(), row.end(),
                      [index](const auto& kv) { return kv.first == index; });
      if (duplicate) {
        parse_fail(line_no, "duplicate feature index " + std::to_string(index));
      }
      row.emplace_back(index, value);
      max_index = std::max(max_index, index);
    }
  }

  if (rows.empty()) {
    throw ValidationError("libsvm parse error: the file holds no samples");
  }
  if (max_index == 0) {
    throw ValidationError("libsvm parse error: no features anywhere");
  }

  Dataset d;
  d.X = Eigen::MatrixXd::Zero(long(rows.size()), max_index);
  d.y = Eigen::VectorXi(long(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.y(long(i)) = labels[i];
    for (const auto& [index, value] : rows[i]) {
      d.X(long(i), index - 1) = value;
    }
  }
  return d;
}

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_libsvm(buf.str());
}

Dataset make_blobs(int n_points, int dim, double separation,
                   std::uint64_t seed) {
  if (n_points < 2) throw ValidationError("make_blobs: need >= 2 points");
  if (dim < 1) throw ValidationError("make_blobs: need dimension >= 1");
  if (!(separation >= 0.0)) {
    throw ValidationError("make_blobs: separation must be >= 0");
  }
  Rng rng(derive_seed(seed, 0x626c6f62 /* "blob" */));
  const Eigen::VectorXd offset = Eigen::VectorXd::Constant(
      dim, 0.5 * separation / std::sqrt(double(dim)));

  Dataset d;
  d.X = Eigen::MatrixXd(n_points, dim);
  d.y = Eigen::VectorXi(n_points);
  for (int i = 0; i < n_points; ++i) {
    const int label = i % 2;
    d.y(i) = label;
    for (int j = 0; j < dim; ++j) {
      d.X(i, j) = rng.next_normal() + (label == 1 ? offset(j) : -offset(j));
    }
  }
  return d;
}

Partition partition_even(int data_size, int num_agents, std::uint64_t seed) {
  if (num_agents < 1) throw ValidationError("need at least one agent");
  if (num_agents > data_size) {
    throw ValidationError("cannot split " + std::to_string(data_size) +
                          " samples across " + std::to_string(num_agents) +
                          " agents");
  }
  std::vector<int> order(static_cast<std::size_t>(data_size));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x70657665 /* "peve" */));
  rng.shuffle(order);

  Partition p;
  p.agent_indices.resize(std::size_t(num_agents));
  const int base = data_size / num_agents;
  const int extra = data_size % num_agents;
  std::size_t cursor = 0;
  for (int a = 0; a < num_agents; ++a) {
    const int take = base + (a < extra ? 1 : 0);
    auto& block = p.agent_indices[std::size_t(a)];
    block.assign(order.begin() + long(cursor),
                 order.begin() + long(cursor) + take);
    std::sort(block.begin(), block.end());
    cursor += std::size_t(take);
  }
  return p;
}

Partition partition_dirichlet(const Dataset& data, int num_agents,
                              double alpha, std::uint64_t seed) {
  if (num_agents < 1) throw ValidationError("need at least one agent");
  if (num_agents > data.size()) {
    throw ValidationError("cannot split " + std::to_string(data.size()) +
                          " samples across " + std::to_string(num_agents) +
                          " agents");
  }
  if (!(alpha > 0.0)) {
    throw ValidationError("dirichlet concentration must be positive");
  }

  std::vector<std::vector<int>> by_class(2);
  for (int i = 0; i < data.size(); ++i) {
    by_class[std::size_t(data.y(i))].push_back(i);
  }

  // Small alpha can starve an agent of every class; redraw a bounded number
  // of times until all blocks are nonempty so downstream samplers have data.
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    Rng rng(derive_seed(seed, 0x70646972 /* "pdir" */, attempt));
    Partition p;
    p.agent_indices.resize(std::size_t(num_agents));
    bool bad_draw = false;

    for (auto members : by_class) {
      if (members.empty()) continue;
      rng.shuffle(members);

      // Dirichlet(alpha) shares via normalized gammas, then integer counts
      // by largest remainder so the class is dealt out exactly.
      Eigen::VectorXd share(num_agents);
      for (int a = 0; a < num_agents; ++a) share(a) = rng.next_gamma(alpha);
      const double total = share.sum();
      if (!(total > 0.0)) {  // pathological underflow; redo the attempt
        bad_draw = true;
        break;
      }
      share /= total;

      const int n_class = int(members.size());
      std::vector<int> counts(static_cast<std::size_t>(num_agents));
      std::vector<std::pair<double, int>> remainders;
      int assigned = 0;
      for (int a = 0; a < num_agents; ++a) {
        const double target = share(a) * n_class;
        counts[std::size_t(a)] = int(std::floor(target));
        assigned += counts[std::size_t(a)];
        remainders.emplace_back(target - std::floor(target), a);
      }
      std::sort(remainders.begin(), remainders.end(), [](auto l, auto r) {
        return l.first != r.first ? l.first > r.first : l.second < r.second;
      });
      for (int k = 0; k < n_class - assigned; ++k) {
        ++counts[std::size_t(remainders[std::size_t(k)].second)];
      }

      std::size_t cursor = 0;
      for (int a = 0; a < num_agents; ++a) {
        for (int k = 0; k < counts[std::size_t(a)]; ++k) {
          p.agent_indices[std::size_t(a)].push_back(members[cursor++]);
        }
      }
    }

    const bool all_nonempty =
        !bad_draw &&
        std::all_of(p.agent_indices.begin(), p.agent_indices.end(),
                    [](const auto& block) { return !block.empty(); });
    if (all_nonempty) {
      for (auto& block : p.agent_indices) {
        std::sort(block.begin(), block.end());
      }
      return p;
    }
  }
  throw ValidationError(
      "dirichlet partition kept starving an agent; raise alpha or add data");
}

void validate_partition(const Partition& p, int data_size) {
  if (p.agent_count() < 1) throw ValidationError("partition has no agents");
  std::vector<char> seen(static_cast<std::size_t>(data_size), 0);
  int covered = 0;
  for (const auto& block : p.agent_indices) {
    if (block.empty()) throw ValidationError("partition has an empty block");
    for (int i : block) {
      if (i < 0 || i >= data_size) {
        throw ValidationError("partition index " + std::to_string(i) +
                              " is out of range");
      }
      if (seen[std::size_t(i)]) {
        throw ValidationError("partition assigns sample " + std::to_string(i) +
                              " twice");
      }
      seen[std::size_t(i)] = 1;
      ++covered;
    }
  }
  if (covered != data_size) {
    throw ValidationError("partition covers " + std::to_string(covered) +
                          " of " + std::to_string(data_size) + " samples");
  }
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

// log(1 + e^t) without overflow on either tail.
double log1p_exp(double t) {
  return t >= 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

}  // namespace

double logistic_loss(const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                     int y, double kappa) {
  const double margin = theta.dot(x);
  return log1p_exp(margin) - double(y) * margin +
         0.5 * kappa * theta.squaredNorm();
}

Eigen::VectorXd logistic_grad(const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& x, int y, double kappa) {
  return x * (sigmoid(theta.dot(x)) - double(y)) + kappa * theta;
}

namespace {

class LogisticProblem final : public Problem {
 public:
  LogisticProblem(Dataset data, Partition partition, double kappa)
      : y_(std::move(data.y)),
        partition_(std::move(partition)),
        kappa_(kappa),
        dim_(int(data.X.cols())) {
    Xt_ = data.X.transpose();  // column per sample: contiguous access
  }

  int dim() const override { return dim_; }
  int agent_count() const override { return partition_.agent_count(); }
  int agent_data_size(int agent) const override {
    return int(partition_.agent_indices[std::size_t(agent)].size());
  }

  void sample_grad(int agent, const Eigen::VectorXd& theta, int local_index,
                   Eigen::VectorXd& out) const override {
    const int g = global_index(agent, local_index);
    const auto x = Xt_.col(g);
    const double s = sigmoid(theta.dot(x)) - double(y_(g));
    out.noalias() = x * s;
    out.noalias() += kappa_ * theta;
  }

  Eigen::VectorXd full_grad(const Eigen::VectorXd& theta) const override {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
    for (const auto& block : partition_.agent_indices) {
      Eigen::VectorXd agent_sum = Eigen::VectorXd::Zero(dim_);
      for (int g : block) {
        const auto x = Xt_.col(g);
        agent_sum.noalias() += x * (sigmoid(theta.dot(x)) - double(y_(g)));
      }
      sum += agent_sum / double(block.size());
    }
    sum /= double(agent_count());
    sum += kappa_ * theta;
    return sum;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const override {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim_, dim_);
    for (const auto& block : partition_.agent_indices) {
      Eigen::MatrixXd agent_sum = Eigen::MatrixXd::Zero(dim_, dim_);
      for (int g : block) {
        const auto x = Xt_.col(g);
        const double s = sigmoid(theta.dot(x));
        agent_sum.noalias() += (s * (1.0 - s)) * (x * x.transpose());
      }
      h += agent_sum / double(block.size());
    }
    h /= double(agent_count());
    h += kappa_ * Eigen::MatrixXd::Identity(dim_, dim_);
    return h;
  }

  double loss(const Eigen::VectorXd& theta) const override {
    double sum = 0.0;
    for (const auto& block : partition_.agent_indices) {
      double agent_sum = 0.0;
      for (int g : block) {
        const auto x = Xt_.col(g);
        const double margin = theta.dot(x);
        agent_sum += log1p_exp(margin) - double(y_(g)) * margin;
      }
      sum += agent_sum / double(block.size());
    }
    return sum / double(agent_count()) + 0.5 * kappa_ * theta.squaredNorm();
  }

 private:
  int global_index(int agent, int local_index) const {
    return partition_.agent_indices[std::size_t(agent)]
                                   [std::size_t(local_index)];
  }

  Eigen::MatrixXd Xt_;  // d x n
  Eigen::VectorXi y_;
  Partition partition_;
  double kappa_;
  int dim_;
};

class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(Eigen::MatrixXd A, Eigen::MatrixXd centers,
                   Partition partition)
      : A_(std::move(A)),
        partition_(std::move(partition)),
        dim_(int(A_.rows())) {
    Ct_ = centers.transpose();  // column per sample
  }

  int dim() const override { return dim_; }
  int agent_count() const override { return partition_.agent_count(); }
  int agent_data_size(int agent) const override {
    return int(partition_.agent_indices[std::size_t(agent)].size());
  }

  void sample_grad(int agent, const Eigen::VectorXd& theta, int local_index,
                   Eigen::VectorXd& out) const override {
    const int g = global_index(agent, local_index);
    out.noalias() = A_ * (theta - Ct_.col(g));
  }

  Eigen::VectorXd full_grad(const Eigen::VectorXd& theta) const override {
    return A_ * (theta - balanced_center());
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd&) const override { return A_; }

  double loss(const Eigen::VectorXd& theta) const override {
    double sum = 0.0;
    for (const auto& block : partition_.agent_indices) {
      double agent_sum = 0.0;
      for (int g : block) {
        const Eigen::VectorXd diff = theta - Ct_.col(g);
        agent_sum += 0.5 * diff.dot(A_ * diff);
      }
      sum += agent_sum / double(block.size());
    }
    return sum / double(agent_count());
  }

 private:
  int global_index(int agent, int local_index) const {
    return partition_.agent_indices[std::size_t(agent)]
                                   [std::size_t(local_index)];
  }

  Eigen::VectorXd balanced_center() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dim_);
    for (const auto& block : partition_.agent_indices) {
      Eigen::VectorXd agent_sum = Eigen::VectorXd::Zero(dim_);
      for (int g : block) agent_sum += Ct_.col(g);
      c += agent_sum / double(block.size());
    }
    return c / double(agent_count());
  }

  Eigen::MatrixXd A_;
  Eigen::MatrixXd Ct_;  // d x n
  Partition partition_;
  int dim_;
};

void check_problem_inputs(int data_size, int data_dim,
                          const Partition& partition) {
  if (data_dim < 1) throw ValidationError("problem dimension must be >= 1");
  validate_partition(partition, data_size);
}

}  // namespace

std::shared_ptr<Problem> make_logistic(Dataset data, Partition partition,
                                       double kappa) {
  if (!(kappa >= 0.0)) {
    throw ValidationError("logistic regularizer kappa must be >= 0");
  }
  if (data.y.size() != data.X.rows()) {
    throw ValidationError("dataset has " + std::to_string(data.X.rows()) +
                          " rows but " + std::to_string(data.y.size()) +
                          " labels");
  }
  for (long i = 0; i < data.y.size(); ++i) {
    if (data.y(i) != 0 && data.y(i) != 1) {
      throw ValidationError("labels must be 0 or 1");
    }
  }
  check_problem_inputs(int(data.X.rows()), int(data.X.cols()), partition);
  return std::make_shared<LogisticProblem>(std::move(data),
                                           std::move(partition), kappa);
}

std::shared_ptr<Problem> make_quadratic(Eigen::MatrixXd A,
                                        Eigen::MatrixXd centers,
                                        Partition partition) {
  if (A.rows() != A.cols() || A.rows() < 1) {
    throw ValidationError("quadratic matrix must be square");
  }
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ValidationError("quadratic matrix must be symmetric");
  }
  if (centers.cols() != A.rows()) {
    throw ValidationError("centers are " + std::to_string(centers.cols()) +
                          "-dimensional but the matrix is " +
                          std::to_string(A.rows()) + "x" +
                          std::to_string(A.cols()));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("quadratic matrix must be positive definite");
  }
  check_problem_inputs(int(centers.rows()), int(centers.cols()), partition);
  return std::make_shared<QuadraticProblem>(std::move(A), std::move(centers),
                                            std::move(partition));
}

Optimum solve_optimum(const Problem& p) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p.dim());
  Eigen::VectorXd grad = p.full_grad(theta);
  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 200;

  Optimum out;
  for (int iter = 1; iter <= kMaxIter; ++iter) {
    if (grad.norm() < kTol) break;
    const Eigen::MatrixXd H = p.hessian(theta);
    const Eigen::VectorXd dir = H.ldlt().solve(grad);
    if (!dir.allFinite()) {
      throw NumericalError("optimum solve: Newton direction is not finite");
    }
    // Halve the step until the gradient norm drops (plain Newton almost
    // always takes the full step on these convex instances).
    double step = 1.0;
    const double g0 = grad.norm();
    Eigen::VectorXd candidate;
    Eigen::VectorXd candidate_grad;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = theta - step * dir;
      candidate_grad = p.full_grad(candidate);
      if (candidate_grad.norm() < g0) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      throw NumericalError(
          "optimum solve: no descent even with tiny Newton steps");
    }
    theta = std::move(candidate);
    grad = std::move(candidate_grad);
    out.iterations = iter;
  }
  if (grad.norm() >= kTol) {
    throw NumericalError("optimum solve: no convergence after " +
                         std::to_string(kMaxIter) + " Newton iterations");
  }

  out.theta = std::move(theta);
  out.hessian = p.hessian(out.theta);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.hessian);
  if (es.info() != Eigen::Success) {
    throw NumericalError("optimum solve: Hessian eigensolve failed");
  }
  out.mu = es.eigenvalues().minCoeff();
  if (!(out.mu > 0.0)) {
    throw NumericalError(
        "optimum solve: Hessian is not positive definite at the optimum "
        "(smallest eigenvalue " + std::to_string(out.mu) + ")");
  }
  return out;
}

}  // namespace udsgd::problems
