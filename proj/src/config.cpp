#include "udsgd/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>

#include "json.hpp"
#include "udsgd/errors.hpp"
#include "udsgd/graph.hpp"
#include "udsgd/rng.hpp"

namespace udsgd::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw ConfigError("config: " + what);
}

// Every key an object may carry; anything else is a typo worth stopping on.
void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* k) { return it.key() == k; });
    if (!known) fail("unknown key '" + prefix + it.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

long get_int(const json& obj, const std::string& prefix, const char* key,
             long fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) {
    fail("'" + prefix + key + "' must be an integer");
  }
  return v->get<long>();
}

double get_num(const json& obj, const std::string& prefix, const char* key,
               double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail("'" + prefix + key + "' must be a number");
  return v->get<double>();
}

std::string get_str(const json& obj, const std::string& prefix,
                    const char* key, const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail("'" + prefix + key + "' must be a string");
  return v->get<std::string>();
}

std::string require_str(const json& obj, const std::string& prefix,
                        const char* key) {
  if (!find(obj, key)) fail("missing required key '" + prefix + key + "'");
  return get_str(obj, prefix, key, "");
}

std::uint64_t get_seed(const json& obj, const std::string& prefix,
                       const char* key, std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer() ||
      (!v->is_number_unsigned() && v->get<long long>() < 0)) {
    fail("'" + prefix + key + "' must be a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

GraphRecipe parse_graph(const json& g, const std::string& prefix) {
  if (!g.is_object()) fail("'" + prefix + "' must be an object");
  check_keys(g, prefix + ".", {"kind", "n", "edge_prob", "seed", "file"});
  GraphRecipe out;
  out.kind = require_str(g, prefix + ".", "kind");
  if (out.kind != "ring" && out.kind != "path" && out.kind != "complete" &&
      out.kind != "random" && out.kind != "file") {
    fail("'" + prefix +
         ".kind' must be one of ring|path|complete|random|file, got '" +
         out.kind + "'");
  }
  out.n = int(get_int(g, prefix + ".", "n", 0));
  if (out.n < 0) fail("'" + prefix + ".n' must be >= 0");
  out.edge_prob = get_num(g, prefix + ".", "edge_prob", 0.3);
  out.seed = get_seed(g, prefix + ".", "seed", 0);
  out.file = get_str(g, prefix + ".", "file", "");
  if (out.kind == "file" && out.file.empty()) {
    fail("graph kind 'file' needs '" + prefix + ".file'");
  }
  return out;
}

std::vector<SamplerGroupRecipe> parse_sampler_groups(
    const json& arr, const std::string& prefix) {
  if (!arr.is_array() || arr.empty()) {
    fail("'" + prefix + "' must be a non-empty array of sampler groups");
  }
  std::vector<SamplerGroupRecipe> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json& g = arr[i];
    const std::string p = prefix + "[" + std::to_string(i) + "].";
    if (!g.is_object()) fail("'" + prefix + "' entries must be objects");
    check_keys(g, p, {"count", "kind", "graph", "alpha", "beta_exponent"});
    SamplerGroupRecipe rec;
    rec.count = int(get_int(g, p, "count", 1));
    if (rec.count < 1) fail("'" + p + "count' must be >= 1");
    rec.kind = sampling::kind_from_name(require_str(g, p, "kind"));
    rec.alpha = get_num(g, p, "alpha", 20.0);
    rec.beta_exponent = get_num(g, p, "beta_exponent", 0.8);
    if (const json* gr = find(g, "graph")) {
      rec.has_graph = true;
      rec.graph = parse_graph(*gr, p + "graph");
    }
    if (sampling::is_walk(rec.kind) && !rec.has_graph) {
      // default: random connected graph over the agent's block
      rec.has_graph = true;
      rec.graph = GraphRecipe{};
    }
    out.push_back(rec);
  }
  return out;
}

json echo_graph(const GraphRecipe& g) {
  json out;
  out["kind"] = g.kind;
  if (g.kind == "file") {
    out["file"] = g.file;
  } else {
    out["n"] = g.n;
    if (g.kind == "random") {
      out["edge_prob"] = g.edge_prob;
      out["seed"] = g.seed;
    }
  }
  return out;
}

json echo_groups(const std::vector<SamplerGroupRecipe>& groups) {
  json arr = json::array();
  for (const auto& g : groups) {
    json e;
    e["count"] = g.count;
    e["kind"] = sampling::kind_name(g.kind);
    if (g.has_graph) e["graph"] = echo_graph(g.graph);
    if (g.kind == sampling::Kind::srrw) {
      e["alpha"] = g.alpha;
      e["beta_exponent"] = g.beta_exponent;
    }
    arr.push_back(e);
  }
  return arr;
}

Graph build_graph(const GraphRecipe& r, int natural_n, std::uint64_t salt) {
  const int n = r.n > 0 ? r.n : natural_n;
  if (r.kind == "file") return Graph::load_edge_list(r.file);
  if (r.kind == "ring") return Graph::ring(n);
  if (r.kind == "path") return Graph::path(n);
  if (r.kind == "complete") return Graph::complete(n);
  return Graph::random_connected(n, r.edge_prob, derive_seed(r.seed, salt));
}

}  // namespace

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::single_run: return "single_run";
    case ExperimentKind::ensemble: return "ensemble";
    case ExperimentKind::clt_compare: return "clt_compare";
    case ExperimentKind::speedup_sweep: return "speedup_sweep";
    case ExperimentKind::network_independence: return "network_independence";
    case ExperimentKind::sampling_sweep: return "sampling_sweep";
  }
  return "?";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

comm::CommPattern build_pattern(const PatternRecipe& r, int agents) {
  if (r.kind == "full_average") return comm::full_average();
  if (r.kind == "partial_participation") {
    return comm::partial_participation(r.participation);
  }
  GraphRecipe g = r.has_graph ? r.graph : GraphRecipe{};
  if (g.n > 0 && g.n != agents) {
    fail("pattern.graph.n = " + std::to_string(g.n) + " but the system has " +
         std::to_string(agents) + " agents");
  }
  if (r.kind == "decentralized_fixed") {
    return comm::decentralized_fixed(
        comm::mh_matrix(build_graph(g, agents, 0x70617466 /* "patf" */)));
  }
  // time-varying: a pool of Metropolis-Hastings matrices, drawn uniformly
  std::vector<Eigen::MatrixXd> pool;
  for (int i = 0; i < r.pool; ++i) {
    GraphRecipe gi = g;
    gi.seed = derive_seed(g.seed, 0x706f6f6c /* "pool" */, std::uint64_t(i));
    pool.push_back(comm::mh_matrix(build_graph(gi, agents, 0)));
  }
  return comm::decentralized_time_varying(pool);
}

namespace {

struct BuiltProblem {
  std::shared_ptr<problems::Problem> problem;
};

// Builds the problem with every agent replicated `dup` times; copies hold
// byte-identical replicas of the base blocks.
BuiltProblem build_problem(const ExperimentConfig& cfg, int dup) {
  const ProblemRecipe& p = cfg.problem;
  const int N = cfg.agents;

  auto tile_partition = [&](const problems::Partition& base,
                            int rows) -> problems::Partition {
    problems::Partition out;
    for (int j = 0; j < dup; ++j) {
      for (const auto& block : base.agent_indices) {
        std::vector<int> shifted = block;
        for (int& idx : shifted) idx += j * rows;
        out.agent_indices.push_back(std::move(shifted));
      }
    }
    return out;
  };

  BuiltProblem out;
  if (p.kind == "quadratic") {
    if (cfg.partition.mode != "even") {
      fail("partition.mode '" + cfg.partition.mode +
           "' needs labeled data; quadratic problems partition evenly");
    }
    Rng rng(derive_seed(p.data_seed, 0x63747273 /* "ctrs" */));
    Eigen::MatrixXd centers(p.n_points, p.dim);
    for (int i = 0; i < p.n_points; ++i) {
      for (int j = 0; j < p.dim; ++j) {
        centers(i, j) = p.spread * rng.next_normal();
      }
    }
    const problems::Partition base =
        problems::partition_even(p.n_points, N, cfg.partition.seed);
    Eigen::MatrixXd tiled(long(p.n_points) * dup, p.dim);
    for (int j = 0; j < dup; ++j) {
      tiled.middleRows(long(j) * p.n_points, p.n_points) = centers;
    }
    out.problem = problems::make_quadratic(
        p.curvature * Eigen::MatrixXd::Identity(p.dim, p.dim), tiled,
        tile_partition(base, p.n_points));
    return out;
  }

  problems::Dataset data =
      p.kind == "logistic"
          ? problems::make_blobs(p.n_points, p.dim, p.separation, p.data_seed)
          : problems::load_libsvm(p.file);
  const problems::Partition base =
      cfg.partition.mode == "even"
          ? problems::partition_even(data.size(), N, cfg.partition.seed)
          : problems::partition_dirichlet(data, N, cfg.partition.alpha,
                                          cfg.partition.seed);
  const int rows = data.size();
  problems::Dataset tiled;
  tiled.X.resize(long(rows) * dup, data.dim());
  tiled.y.resize(long(rows) * dup);
  for (int j = 0; j < dup; ++j) {
    tiled.X.middleRows(long(j) * rows, rows) = data.X;
    tiled.y.segment(long(j) * rows, rows) = data.y;
  }
  out.problem = problems::make_logistic(std::move(tiled),
                                        tile_partition(base, rows), p.kappa);
  return out;
}

std::vector<sampling::SamplerSpec> expand_samplers(
    const std::vector<SamplerGroupRecipe>& groups,
    const problems::Problem& problem, int base_agents, int dup) {
  int total = 0;
  for (const auto& g : groups) total += g.count;
  if (total != base_agents) {
    fail("sampler group counts sum to " + std::to_string(total) + " but " +
         std::to_string(base_agents) + " agents are configured");
  }

  // Base specs for agents 0..N-1; copies reuse them (same graph object, so
  // a duplicated agent runs an exact replica of the original's strategy).
  std::vector<sampling::SamplerSpec> base;
  base.reserve(std::size_t(base_agents));
  int agent = 0;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    std::shared_ptr<const Graph> file_graph;
    if (g.has_graph && g.graph.kind == "file") {
      file_graph = std::make_shared<Graph>(Graph::load_edge_list(g.graph.file));
    }
    for (int c = 0; c < g.count; ++c, ++agent) {
      sampling::SamplerSpec spec;
      spec.kind = g.kind;
      spec.alpha = g.alpha;
      spec.beta_exponent = g.beta_exponent;
      if (g.has_graph) {
        const int B = problem.agent_data_size(agent);
        if (g.graph.kind == "file") {
          spec.graph = file_graph;
        } else {
          if (g.graph.n > 0 && g.graph.n != B) {
            fail("samplers[" + std::to_string(gi) + "].graph.n = " +
                 std::to_string(g.graph.n) + " but agent " +
                 std::to_string(agent) + " holds " + std::to_string(B) +
                 " samples");
          }
          spec.graph = std::make_shared<Graph>(build_graph(
              g.graph, B,
              derive_seed(0x67726166 /* "graf" */, std::uint64_t(agent))));
        }
      }
      base.push_back(std::move(spec));
    }
  }

  std::vector<sampling::SamplerSpec> out;
  out.reserve(std::size_t(base_agents) * dup);
  for (int j = 0; j < dup; ++j) {
    for (const auto& spec : base) out.push_back(spec);
  }
  return out;
}

engine::RunConfig assemble(const ExperimentConfig& cfg,
                           const std::vector<SamplerGroupRecipe>& groups,
                           int dup) {
  if (dup < 1) fail("duplication factor must be >= 1");
  const BuiltProblem bp = build_problem(cfg, dup);
  engine::RunConfig run;
  run.problem = bp.problem;
  run.samplers = expand_samplers(groups, *bp.problem, cfg.agents, dup);
  run.pattern = build_pattern(cfg.pattern, cfg.agents * dup);
  run.interval = cfg.interval;
  run.step = cfg.step;
  run.horizon = cfg.horizon;
  run.metric_stride = cfg.metric_stride;
  run.seed = cfg.seed;
  run.theta_star = problems::solve_optimum(*bp.problem).theta;
  engine::validate_config(run);
  return run;
}

}  // namespace

engine::RunConfig materialize(const ExperimentConfig& cfg,
                              const std::vector<SamplerGroupRecipe>& groups) {
  return assemble(cfg, groups, 1);
}

engine::RunConfig materialize_duplicated(const ExperimentConfig& cfg, int k) {
  return assemble(cfg, cfg.samplers, k);
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  check_keys(j, "",
             {"experiment", "seed", "trials", "threads", "horizon",
              "metric_stride", "out", "agents", "problem", "partition",
              "samplers", "pattern", "schedule", "step", "speedup_factors",
              "variants"});

  ExperimentConfig cfg;

  const std::string ek = get_str(j, "", "experiment", "single_run");
  if (ek == "single_run") cfg.experiment = ExperimentKind::single_run;
  else if (ek == "ensemble") cfg.experiment = ExperimentKind::ensemble;
  else if (ek == "clt_compare") cfg.experiment = ExperimentKind::clt_compare;
  else if (ek == "speedup_sweep") cfg.experiment = ExperimentKind::speedup_sweep;
  else if (ek == "network_independence") cfg.experiment = ExperimentKind::network_independence;
  else if (ek == "sampling_sweep") cfg.experiment = ExperimentKind::sampling_sweep;
  else {
    fail("'experiment' must be one of single_run|ensemble|clt_compare|"
         "speedup_sweep|network_independence|sampling_sweep, got '" + ek +
         "'");
  }

  if (!find(j, "seed")) {
    fail("missing required key 'seed' (every run must be reproducible)");
  }
  cfg.seed = get_seed(j, "", "seed", 0);

  cfg.trials = int(get_int(j, "", "trials", 100));
  if (cfg.trials < 1) fail("'trials' must be >= 1");
  cfg.threads = int(get_int(j, "", "threads", 1));
  if (cfg.threads < 1) fail("'threads' must be >= 1");
  cfg.horizon = get_int(j, "", "horizon", 10000);
  if (cfg.horizon < 1) fail("'horizon' must be >= 1");
  cfg.metric_stride = get_int(j, "", "metric_stride", 100);
  if (cfg.metric_stride < 1) fail("'metric_stride' must be >= 1");
  cfg.out_dir = get_str(j, "", "out", "out");

  // problem
  const json* pj = find(j, "problem");
  if (!pj) fail("missing required key 'problem'");
  if (!pj->is_object()) fail("'problem' must be an object");
  cfg.problem.kind = require_str(*pj, "problem.", "kind");
  if (cfg.problem.kind == "logistic") {
    check_keys(*pj, "problem.",
               {"kind", "n_points", "dim", "separation", "kappa", "data_seed"});
  } else if (cfg.problem.kind == "quadratic") {
    check_keys(*pj, "problem.",
               {"kind", "n_points", "dim", "spread", "curvature", "data_seed"});
  } else if (cfg.problem.kind == "libsvm") {
    check_keys(*pj, "problem.", {"kind", "file", "kappa"});
    cfg.problem.file = require_str(*pj, "problem.", "file");
  } else {
    fail("'problem.kind' must be one of logistic|quadratic|libsvm, got '" +
         cfg.problem.kind + "'");
  }
  cfg.problem.n_points = int(get_int(*pj, "problem.", "n_points",
                                     cfg.problem.kind == "quadratic" ? 10
                                                                     : 100));
  if (cfg.problem.n_points < 1) fail("'problem.n_points' must be >= 1");
  cfg.problem.dim = int(get_int(*pj, "problem.", "dim", 2));
  if (cfg.problem.dim < 1) fail("'problem.dim' must be >= 1");
  cfg.problem.separation = get_num(*pj, "problem.", "separation", 2.0);
  cfg.problem.kappa = get_num(*pj, "problem.", "kappa", 1.0);
  cfg.problem.spread = get_num(*pj, "problem.", "spread", 1.0);
  cfg.problem.curvature = get_num(*pj, "problem.", "curvature", 1.0);
  cfg.problem.data_seed = get_seed(*pj, "problem.", "data_seed", 0);

  // partition
  if (const json* qj = find(j, "partition")) {
    if (!qj->is_object()) fail("'partition' must be an object");
    check_keys(*qj, "partition.", {"mode", "alpha", "seed"});
    cfg.partition.mode = get_str(*qj, "partition.", "mode", "even");
    if (cfg.partition.mode != "even" && cfg.partition.mode != "dirichlet") {
      fail("'partition.mode' must be even|dirichlet, got '" +
           cfg.partition.mode + "'");
    }
    cfg.partition.alpha = get_num(*qj, "partition.", "alpha", 0.5);
    if (cfg.partition.alpha <= 0) fail("'partition.alpha' must be > 0");
    cfg.partition.seed = get_seed(*qj, "partition.", "seed", 0);
  }

  // samplers + agents
  if (const json* sj = find(j, "samplers")) {
    cfg.samplers = parse_sampler_groups(*sj, "samplers");
  }
  int sampler_total = 0;
  for (const auto& g : cfg.samplers) sampler_total += g.count;
  if (find(j, "agents")) {
    cfg.agents = int(get_int(j, "", "agents", 1));
    if (cfg.agents < 1) fail("'agents' must be >= 1");
    if (!cfg.samplers.empty() && sampler_total != cfg.agents) {
      fail("sampler group counts sum to " + std::to_string(sampler_total) +
           " but 'agents' is " + std::to_string(cfg.agents));
    }
  } else if (!cfg.samplers.empty()) {
    cfg.agents = sampler_total;
  }
  if (cfg.samplers.empty()) {
    SamplerGroupRecipe g;
    g.count = cfg.agents;
    cfg.samplers.push_back(g);
  }

  // pattern
  if (const json* tj = find(j, "pattern")) {
    if (!tj->is_object()) fail("'pattern' must be an object");
    check_keys(*tj, "pattern.",
               {"kind", "participation", "graph", "pool"});
    cfg.pattern.kind = get_str(*tj, "pattern.", "kind", "full_average");
    if (cfg.pattern.kind != "full_average" &&
        cfg.pattern.kind != "partial_participation" &&
        cfg.pattern.kind != "decentralized_fixed" &&
        cfg.pattern.kind != "decentralized_time_varying") {
      fail("'pattern.kind' must be one of full_average|partial_participation|"
           "decentralized_fixed|decentralized_time_varying, got '" +
           cfg.pattern.kind + "'");
    }
    cfg.pattern.participation =
        int(get_int(*tj, "pattern.", "participation", 1));
    cfg.pattern.pool = int(get_int(*tj, "pattern.", "pool", 5));
    if (cfg.pattern.pool < 1) fail("'pattern.pool' must be >= 1");
    if (const json* gj = find(*tj, "graph")) {
      cfg.pattern.has_graph = true;
      cfg.pattern.graph = parse_graph(*gj, "pattern.graph");
    }
  }

  // schedule + step
  if (const json* kj = find(j, "schedule")) {
    if (!kj->is_object()) fail("'schedule' must be an object");
    check_keys(*kj, "schedule.", {"kind", "K"});
    const std::string sk = get_str(*kj, "schedule.", "kind", "constant");
    if (sk == "constant") {
      cfg.interval.kind = comm::IntervalSchedule::Kind::constant;
    } else if (sk == "log_growth") {
      cfg.interval.kind = comm::IntervalSchedule::Kind::log_growth;
    } else if (sk == "loglog_growth") {
      cfg.interval.kind = comm::IntervalSchedule::Kind::loglog_growth;
    } else {
      fail("'schedule.kind' must be constant|log_growth|loglog_growth, got '" +
           sk + "'");
    }
    cfg.interval.constant_K = get_int(*kj, "schedule.", "K", 1);
    if (cfg.interval.constant_K < 1) fail("'schedule.K' must be >= 1");
  }
  if (const json* gj = find(j, "step")) {
    if (!gj->is_object()) fail("'step' must be an object");
    check_keys(*gj, "step.", {"gamma_star", "a"});
    cfg.step.gamma_star = get_num(*gj, "step.", "gamma_star", 1.0);
    cfg.step.a = get_num(*gj, "step.", "a", 1.0);
  }

  // sweep payloads
  if (const json* fj = find(j, "speedup_factors")) {
    if (!fj->is_array() || fj->empty()) {
      fail("'speedup_factors' must be a non-empty array of integers");
    }
    cfg.speedup_factors.clear();
    for (std::size_t i = 0; i < fj->size(); ++i) {
      const json& v = (*fj)[i];
      if (!v.is_number_integer() || v.get<long>() < 1) {
        fail("'speedup_factors' entries must be integers >= 1");
      }
      cfg.speedup_factors.push_back(int(v.get<long>()));
    }
  }
  if (const json* vj = find(j, "variants")) {
    if (!vj->is_array() || vj->empty()) {
      fail("'variants' must be a non-empty array");
    }
    for (std::size_t i = 0; i < vj->size(); ++i) {
      const json& v = (*vj)[i];
      const std::string p = "variants[" + std::to_string(i) + "].";
      if (!v.is_object()) fail("'variants' entries must be objects");
      check_keys(v, p, {"name", "samplers"});
      VariantRecipe var;
      var.name = require_str(v, p, "name");
      if (var.name.empty()) fail("'" + p + "name' must not be empty");
      const json* gs = find(v, "samplers");
      if (!gs) fail("missing required key '" + p + "samplers'");
      var.samplers = parse_sampler_groups(*gs, p + "samplers");
      int total = 0;
      for (const auto& g : var.samplers) total += g.count;
      if (total != cfg.agents) {
        fail("'" + p + "samplers' counts sum to " + std::to_string(total) +
             " but the system has " + std::to_string(cfg.agents) + " agents");
      }
      cfg.variants.push_back(std::move(var));
    }
  }
  if (cfg.experiment == ExperimentKind::sampling_sweep &&
      cfg.variants.empty()) {
    fail("experiment 'sampling_sweep' needs a 'variants' array");
  }

  // Materialize the base system now so every cross-field inconsistency
  // (schedules, graph sizes, pattern arity) surfaces at parse time.
  cfg.run = materialize(cfg, cfg.samplers);

  // Canonical echo: all defaults explicit, keys sorted by the JSON library.
  // 'out' and 'threads' are deliberately left out of the hash: neither can
  // change a computed value, and files rerun into another directory or with
  // another worker count must stay byte-identical.
  json echo;
  echo["experiment"] = kind_name(cfg.experiment);
  echo["seed"] = cfg.seed;
  echo["trials"] = cfg.trials;
  echo["horizon"] = cfg.horizon;
  echo["metric_stride"] = cfg.metric_stride;
  echo["agents"] = cfg.agents;
  json pe;
  pe["kind"] = cfg.problem.kind;
  if (cfg.problem.kind == "libsvm") {
    pe["file"] = cfg.problem.file;
    pe["kappa"] = cfg.problem.kappa;
  } else {
    pe["n_points"] = cfg.problem.n_points;
    pe["dim"] = cfg.problem.dim;
    pe["data_seed"] = cfg.problem.data_seed;
    if (cfg.problem.kind == "logistic") {
      pe["separation"] = cfg.problem.separation;
      pe["kappa"] = cfg.problem.kappa;
    } else {
      pe["spread"] = cfg.problem.spread;
      pe["curvature"] = cfg.problem.curvature;
    }
  }
  echo["problem"] = pe;
  json qe;
  qe["mode"] = cfg.partition.mode;
  qe["seed"] = cfg.partition.seed;
  if (cfg.partition.mode == "dirichlet") qe["alpha"] = cfg.partition.alpha;
  echo["partition"] = qe;
  echo["samplers"] = echo_groups(cfg.samplers);
  json te;
  te["kind"] = cfg.pattern.kind;
  if (cfg.pattern.kind == "partial_participation") {
    te["participation"] = cfg.pattern.participation;
  }
  if (cfg.pattern.kind == "decentralized_fixed" ||
      cfg.pattern.kind == "decentralized_time_varying") {
    te["graph"] =
        echo_graph(cfg.pattern.has_graph ? cfg.pattern.graph : GraphRecipe{});
  }
  if (cfg.pattern.kind == "decentralized_time_varying") {
    te["pool"] = cfg.pattern.pool;
  }
  echo["pattern"] = te;
  json ke;
  ke["kind"] = cfg.interval.kind == comm::IntervalSchedule::Kind::constant
                   ? "constant"
                   : (cfg.interval.kind ==
                              comm::IntervalSchedule::Kind::log_growth
                          ? "log_growth"
                          : "loglog_growth");
  ke["K"] = cfg.interval.constant_K;
  echo["schedule"] = ke;
  json se;
  se["gamma_star"] = cfg.step.gamma_star;
  se["a"] = cfg.step.a;
  echo["step"] = se;
  if (cfg.experiment == ExperimentKind::speedup_sweep) {
    echo["speedup_factors"] = cfg.speedup_factors;
  }
  if (!cfg.variants.empty()) {
    json ve = json::array();
    for (const auto& var : cfg.variants) {
      json e;
      e["name"] = var.name;
      e["samplers"] = echo_groups(var.samplers);
      ve.push_back(e);
    }
    echo["variants"] = ve;
  }
  cfg.canonical = echo.dump();

  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0')
      << fnv1a(cfg.canonical);
  cfg.config_hash = hex.str();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace udsgd::config
