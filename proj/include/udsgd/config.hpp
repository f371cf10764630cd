#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "udsgd/engine.hpp"

namespace udsgd::config {

// Recipes: the declarative half of a config file. materialize() turns them
// into live objects (datasets, graphs, mixing matrices) so sweep drivers can
// rebuild variants (different sampler mixes, duplicated agents, alternative
// communication patterns) from the same parsed description.

struct GraphRecipe {
  std::string kind = "random";  // ring | path | complete | random | file
  int n = 0;                    // 0 = natural size (agent block / agent count)
  double edge_prob = 0.3;       // random kind
  std::uint64_t seed = 0;       // random kind; per-agent seeds derive from it
  std::string file;             // file kind: edge-list path
};

struct SamplerGroupRecipe {
  int count = 1;
  sampling::Kind kind = sampling::Kind::iid;
  bool has_graph = false;
  GraphRecipe graph;
  double alpha = 20.0;
  double beta_exponent = 0.8;
};

struct ProblemRecipe {
  std::string kind;        // logistic | quadratic | libsvm
  int n_points = 100;      // synthetic kinds
  int dim = 2;             // synthetic kinds
  double separation = 2.0; // logistic blob offset
  double kappa = 1.0;      // logistic l2 strength
  double spread = 1.0;     // quadratic center scale
  double curvature = 1.0;  // quadratic A = curvature * I
  std::uint64_t data_seed = 0;
  std::string file;        // libsvm path
};

struct PartitionRecipe {
  std::string mode = "even";  // even | dirichlet
  double alpha = 0.5;         // dirichlet concentration
  std::uint64_t seed = 0;
};

struct PatternRecipe {
  std::string kind = "full_average";  // | partial_participation
                                      // | decentralized_fixed
                                      // | decentralized_time_varying
  int participation = 1;              // partial: agents per round
  bool has_graph = false;
  GraphRecipe graph;                  // decentralized kinds: connectivity
  int pool = 5;                       // time-varying: matrices in the pool
};

struct VariantRecipe {
  std::string name;
  std::vector<SamplerGroupRecipe> samplers;
};

enum class ExperimentKind {
  single_run,
  ensemble,
  clt_compare,
  speedup_sweep,
  network_independence,
  sampling_sweep,
};
const char* kind_name(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::single_run;
  std::uint64_t seed = 0;
  int trials = 100;
  int threads = 1;
  long horizon = 10000;
  long metric_stride = 100;
  std::string out_dir = "out";
  int agents = 1;

  ProblemRecipe problem;
  PartitionRecipe partition;
  std::vector<SamplerGroupRecipe> samplers;
  PatternRecipe pattern;
  comm::IntervalSchedule interval{comm::IntervalSchedule::Kind::constant, 1};
  comm::StepSchedule step{1.0, 1.0};

  std::vector<int> speedup_factors{1, 2, 4};  // speedup_sweep
  std::vector<VariantRecipe> variants;        // sampling_sweep

  // Materialized base system plus the canonical echo of the parsed file
  // (defaults filled in, keys sorted) and its hash, which every CSV header
  // records.
  engine::RunConfig run;
  std::string canonical;
  std::string config_hash;
};

// Parses and fully validates a JSON experiment description. Unknown keys,
// missing seed, and type mismatches raise ConfigError naming the key path.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Rebuilds the base system with a different agent composition. Group counts
// must sum to cfg.agents.
engine::RunConfig materialize(const ExperimentConfig& cfg,
                              const std::vector<SamplerGroupRecipe>& groups);

// k-fold agent duplication: every configured agent appears k times, each
// copy holding its own replica of the original data block and an identical
// sampler. Used by the speedup sweep.
engine::RunConfig materialize_duplicated(const ExperimentConfig& cfg, int k);

comm::CommPattern build_pattern(const PatternRecipe& recipe, int agents);

std::uint64_t fnv1a(const std::string& s);

}  // namespace udsgd::config
