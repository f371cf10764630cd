#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "udsgd/graph.hpp"
#include "udsgd/rng.hpp"

namespace udsgd::sampling {

// Data-sampling strategies an agent can run over its local dataset:
//   iid      uniform with replacement
//   shuffle  one random permutation, replayed in the same order every epoch
//   srw      simple random walk on the agent's data graph
//   nbrw     non-backtracking random walk (degree-1 nodes force a backtrack)
//   srrw     self-repellent random walk: a nonlinear kernel that discounts
//            transitions to nodes visited more often than their target share
enum class Kind { iid, shuffle, srw, nbrw, srrw };

bool is_walk(Kind k);
const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

struct SamplerSpec {
  Kind kind = Kind::iid;
  std::shared_ptr<const Graph> graph;  // required iff is_walk(kind)
  double alpha = 20.0;                 // srrw: repellence strength, >= 0
  double beta_exponent = 0.8;          // srrw: measure step exponent in (0.5, 1]
};

// Validates spec/dataset compatibility (walk kinds need a graph whose node
// count equals the dataset size; srrw parameters in range). Throws
// ValidationError with context on violation.
void validate_spec(const SamplerSpec& spec, int dataset_size);

// Stream of dataset indices. The first next() call returns the initial draw
// (uniform start node / first permutation entry), later calls advance the
// strategy. Deterministic given (spec, seed).
class Sampler {
 public:
  Sampler(const SamplerSpec& spec, int dataset_size, std::uint64_t seed);

  int next();
  int dataset_size() const { return size_; }

  // srrw only: current empirical visit measure x (simplex, strictly positive).
  const Eigen::VectorXd& empirical_measure() const;

  // Current kernel row from `node` for the memoryless walk kinds (srw, srrw);
  // the srrw row depends on the accumulated measure. Full-length vector.
  Eigen::VectorXd transition_row(int node) const;

 private:
  int first_draw();
  int step_walk();

  SamplerSpec spec_;
  int size_;
  Rng rng_;
  std::vector<int> permutation_;  // shuffle: the fixed epoch order
  long cursor_ = 0;               // shuffle position
  int current_ = -1;              // walk position (-1 until first draw)
  int previous_ = -1;             // nbrw memory
  Eigen::VectorXd measure_;       // srrw empirical measure x
  Eigen::VectorXd log_target_;    // srrw log mu (degree-proportional)
  long transitions_ = 0;          // srrw moves so far; drives the beta step
};

// The stationary law the strategy targets on the dataset: uniform for
// iid/shuffle, degree-proportional for the walk kinds.
Eigen::VectorXd stationary_law(const SamplerSpec& spec, int dataset_size);

// Reweighting factor w(x) = 1 / (B * pi(x)): 1 for uniform kinds,
// deg_total / (B * deg(x)) for walks. Makes weighted sample averages target
// the uniform mean over the dataset.
double stationary_weight(const SamplerSpec& spec, int dataset_size, int index);
Eigen::VectorXd stationary_weights(const SamplerSpec& spec, int dataset_size);

}  // namespace udsgd::sampling
