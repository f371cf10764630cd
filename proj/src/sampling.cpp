#include "udsgd/sampling.hpp"

#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

#include "udsgd/errors.hpp"

namespace udsgd::sampling {

bool is_walk(Kind k) {
  return k == Kind::srw || k == Kind::nbrw || k == Kind::srrw;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::iid: return "iid";
    case Kind::shuffle: return "shuffle";
    case Kind::srw: return "srw";
    case Kind::nbrw: return "nbrw";
    case Kind::srrw: return "srrw";
  }
  return "?";
}

Kind kind_from_name(const std::string& name) {
  if (name == "iid") return Kind::iid;
  if (name == "shuffle") return Kind::shuffle;
  if (name == "srw") return Kind::srw;
  if (name == "nbrw") return Kind::nbrw;
  if (name == "srrw") return Kind::srrw;
  throw ValidationError(
      "unknown sampler kind '" + name +
      "' (expected iid, shuffle, srw, nbrw, or srrw)");
}

void validate_spec(const SamplerSpec& spec, int dataset_size) {
  if (dataset_size < 1) {
    throw ValidationError("sampler needs a non-empty dataset");
  }
  if (is_walk(spec.kind)) {
    if (!spec.graph) {
      throw ValidationError(std::string(kind_name(spec.kind)) +
                            " sampler needs a data graph");
    }
    if (spec.graph->node_count() != dataset_size) {
      throw ValidationError(
          std::string(kind_name(spec.kind)) + " sampler: graph has " +
          std::to_string(spec.graph->node_count()) + " nodes but the dataset " +
          "has " + std::to_string(dataset_size) + " items");
    }
  }
  if (spec.kind == Kind::srrw) {
    if (spec.alpha < 0.0) {
      throw ValidationError("srrw: alpha must be >= 0");
    }
    if (!(spec.beta_exponent > 0.5) || spec.beta_exponent > 1.0) {
      throw ValidationError("srrw: beta_exponent must lie in (0.5, 1]");
    }
  }
}

Sampler::Sampler(const SamplerSpec& spec, int dataset_size, std::uint64_t seed)
    : spec_(spec), size_(dataset_size), rng_(seed) {
  validate_spec(spec_, size_);
  if (spec_.kind == Kind::shuffle) {
    permutation_.resize(std::size_t(size_));
    std::iota(permutation_.begin(), permutation_.end(), 0);
    rng_.shuffle(permutation_);
  }
  if (spec_.kind == Kind::srrw) {
    // Start from the uniform measure: every node "visited once".
    measure_ = Eigen::VectorXd::Constant(size_, 1.0 / double(size_));
    log_target_.resize(size_);
    const Graph& g = *spec_.graph;
    const double total = double(g.degree_total());
    for (int v = 0; v < size_; ++v) {
      log_target_(v) = std::log(double(g.degree(v)) / total);
    }
  }
}

int Sampler::next() {
  switch (spec_.kind) {
    case Kind::iid:
      return rng_.next_index(size_);
    case Kind::shuffle: {
      const int out = permutation_[std::size_t(cursor_)];
      cursor_ = (cursor_ + 1) % size_;
      return out;
    }
    default:
      break;
  }
  if (current_ < 0) return first_draw();
  return step_walk();
}

int Sampler::first_draw() {
  current_ = rng_.next_index(size_);  // uniform start node
  previous_ = -1;
  return current_;
}

int Sampler::step_walk() {
  const Graph& g = *spec_.graph;
  const auto& nbrs = g.neighbors(current_);
  const int deg = int(nbrs.size());
  int dest = -1;

  switch (spec_.kind) {
    case Kind::srw:
      dest = nbrs[std::size_t(rng_.next_index(deg))];
      break;

    case Kind::nbrw: {
      if (previous_ < 0 || deg == 1) {
        // no memory yet (first move) or a dead end: plain SRW step
        dest = nbrs[std::size_t(rng_.next_index(deg))];
      } else {
        // uniform over neighbors excluding the node we came from
        int k = rng_.next_index(deg - 1);
        for (int j = 0; j < deg; ++j) {
          if (nbrs[std::size_t(j)] == previous_) continue;
          if (k == 0) {
            dest = nbrs[std::size_t(j)];
            break;
          }
          --k;
        }
      }
      previous_ = current_;
      break;
    }

    case Kind::srrw: {
      // Kernel row ~ P(current, j) * (x_j / mu_j)^(-alpha) over neighbors.
      // Evaluated in log space: the measure ratio to the -alpha power
      // overflows double for rarely visited nodes once alpha is large.
      double logw[64];
      double* lw = deg <= 64 ? logw : new double[std::size_t(deg)];
      double lmax = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < deg; ++j) {
        const int v = nbrs[std::size_t(j)];
        lw[j] = -spec_.alpha * (std::log(measure_(v)) - log_target_(v));
        lmax = std::max(lmax, lw[j]);
      }
      double total = 0.0;
      for (int j = 0; j < deg; ++j) {
        lw[j] = std::exp(lw[j] - lmax);  // baseline 1/deg cancels
        total += lw[j];
      }
      const double u = rng_.next_unit() * total;
      double acc = 0.0;
      dest = nbrs[std::size_t(deg - 1)];
      for (int j = 0; j < deg; ++j) {
        acc += lw[j];
        if (u < acc) {
          dest = nbrs[std::size_t(j)];
          break;
        }
      }
      if (deg > 64) delete[] lw;
      break;
    }

    default:
      assert(false && "not a walk kind");
  }

  current_ = dest;
  if (spec_.kind == Kind::srrw) {
    // Stochastic-approximation update of the visit measure with
    // beta_t = (t + 1)^(-b) on the t-th move.
    ++transitions_;
    const double beta =
        std::pow(double(transitions_ + 1), -spec_.beta_exponent);
    measure_ *= (1.0 - beta);
    measure_(dest) += beta;
  }
  return current_;
}

const Eigen::VectorXd& Sampler::empirical_measure() const {
  if (spec_.kind != Kind::srrw) {
    throw ValidationError("empirical_measure is defined only for srrw");
  }
  return measure_;
}

Eigen::VectorXd Sampler::transition_row(int node) const {
  if (node < 0 || node >= size_) {
    throw ValidationError("transition_row: node out of range");
  }
  Eigen::VectorXd row = Eigen::VectorXd::Zero(size_);
  switch (spec_.kind) {
    case Kind::srw: {
      const auto& nbrs = spec_.graph->neighbors(node);
      for (int v : nbrs) row(v) = 1.0 / double(nbrs.size());
      return row;
    }
    case Kind::srrw: {
      const auto& nbrs = spec_.graph->neighbors(node);
      double lmax = -std::numeric_limits<double>::infinity();
      for (int v : nbrs) {
        const double lw =
            -spec_.alpha * (std::log(measure_(v)) - log_target_(v));
        row(v) = lw;
        lmax = std::max(lmax, lw);
      }
      double total = 0.0;
      for (int v : nbrs) {
        row(v) = std::exp(row(v) - lmax);
        total += row(v);
      }
      for (int v : nbrs) row(v) /= total;
      return row;
    }
    default:
      throw ValidationError(
          std::string("transition_row is defined only for the memoryless "
                      "walk kinds, not ") +
          kind_name(spec_.kind));
  }
}

Eigen::VectorXd stationary_law(const SamplerSpec& spec, int dataset_size) {
  validate_spec(spec, dataset_size);
  if (!is_walk(spec.kind)) {
    return Eigen::VectorXd::Constant(dataset_size, 1.0 / double(dataset_size));
  }
  const Graph& g = *spec.graph;
  Eigen::VectorXd pi(dataset_size);
  const double total = double(g.degree_total());
  for (int v = 0; v < dataset_size; ++v) pi(v) = double(g.degree(v)) / total;
  return pi;
}

double stationary_weight(const SamplerSpec& spec, int dataset_size,
                         int index) {
  validate_spec(spec, dataset_size);
  if (index < 0 || index >= dataset_size) {
    throw ValidationError("stationary_weight: index out of range");
  }
  if (!is_walk(spec.kind)) return 1.0;
  const Graph& g = *spec.graph;
  return double(g.degree_total()) /
         (double(dataset_size) * double(g.degree(index)));
}

Eigen::VectorXd stationary_weights(const SamplerSpec& spec, int dataset_size) {
  Eigen::VectorXd w(dataset_size);
  for (int i = 0; i < dataset_size; ++i) {
    w(i) = stationary_weight(spec, dataset_size, i);
  }
  return w;
}

}  // namespace udsgd::sampling
