#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace udsgd::problems {

// Binary-classification dataset: one row of X per sample, labels in {0, 1}.
struct Dataset {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXi y;  // n, entries 0 or 1

  int size() const { return int(X.rows()); }
  int dim() const { return int(X.cols()); }
};

// LIBSVM text: "label idx:val idx:val ..." per line, 1-based sparse indices.
// Labels > 0 map to 1, everything else to 0; features are densified to the
// maximum index seen anywhere in the file. Throws ValidationError with the
// offending line number on malformed input or an empty dataset.
Dataset parse_libsvm(const std::string& text);
Dataset load_libsvm(const std::string& path);

// Two seeded Gaussian blobs with unit covariance, centers `separation` apart
// along the all-ones direction; labels alternate so classes are balanced.
Dataset make_blobs(int n_points, int dim, double separation,
                   std::uint64_t seed);

// Disjoint covering assignment of dataset indices to agents.
struct Partition {
  std::vector<std::vector<int>> agent_indices;

  int agent_count() const { return int(agent_indices.size()); }
};

// Seeded shuffle dealt into near-equal blocks (sizes differ by at most one).
Partition partition_even(int data_size, int num_agents, std::uint64_t seed);

// Heterogeneous split: per class, agent shares are drawn from a symmetric
// Dirichlet(alpha) and samples dealt by largest-remainder counts. Redraws
// (bounded) until every agent holds at least one sample.
Partition partition_dirichlet(const Dataset& data, int num_agents,
                              double alpha, std::uint64_t seed);

// Throws ValidationError unless the partition is a disjoint cover of
// {0..data_size-1} with nonempty blocks.
void validate_partition(const Partition& p, int data_size);

// A distributed objective f = (1/N) sum_i f_i where agent i averages a
// per-sample loss F_i over its data block. Evaluation is pure given
// (agent, theta, index) and safe to call concurrently.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int dim() const = 0;
  virtual int agent_count() const = 0;
  virtual int agent_data_size(int agent) const = 0;

  // Gradient of the per-sample loss F_agent(theta, sample) at the agent's
  // local_index-th sample, written into `out` (sized dim()).
  virtual void sample_grad(int agent, const Eigen::VectorXd& theta,
                           int local_index, Eigen::VectorXd& out) const = 0;

  virtual Eigen::VectorXd full_grad(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const = 0;
  virtual double loss(const Eigen::VectorXd& theta) const = 0;
};

// F(theta, (x, y)) = log(1 + e^{theta.x}) - y theta.x + (kappa/2)|theta|^2
// with the regularizer applied per sample. kappa > 0 makes f strongly convex.
std::shared_ptr<Problem> make_logistic(Dataset data, Partition partition,
                                       double kappa = 1.0);

// F(theta, X) = 1/2 (theta - c_X)' A (theta - c_X) with SPD A and one center
// row per sample; the optimum is the (agent-balanced) mean of the centers.
std::shared_ptr<Problem> make_quadratic(Eigen::MatrixXd A,
                                        Eigen::MatrixXd centers,
                                        Partition partition);

// Ground-truth optimum: Newton with step halving until |grad f| < 1e-10.
struct Optimum {
  Eigen::VectorXd theta;
  Eigen::MatrixXd hessian;  // at theta
  double mu = 0.0;          // smallest Hessian eigenvalue, > 0
  int iterations = 0;
};
Optimum solve_optimum(const Problem& p);

// Per-sample logistic pieces, exposed for direct checks. Numerically stable
// for large |theta.x|.
double sigmoid(double t);
double logistic_loss(const Eigen::VectorXd& theta, const Eigen::VectorXd& x,
                     int y, double kappa);
Eigen::VectorXd logistic_grad(const Eigen::VectorXd& theta,
                              const Eigen::VectorXd& x, int y, double kappa);

}  // namespace udsgd::problems
