#include "udsgd/sampling.hpp"

#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "doctest.h"
#include "udsgd/errors.hpp"

using namespace udsgd;
using namespace udsgd::sampling;

namespace {

std::shared_ptr<const Graph> shared_graph(Graph g) {
  return std::make_shared<const Graph>(std::move(g));
}

SamplerSpec walk_spec(Kind kind, std::shared_ptr<const Graph> g) {
  SamplerSpec spec;
  spec.kind = kind;
  spec.graph = std::move(g);
  return spec;
}

}  // namespace

TEST_CASE("kind names round-trip") {
  for (Kind k : {Kind::iid, Kind::shuffle, Kind::srw, Kind::nbrw, Kind::srrw})
    CHECK(kind_from_name(kind_name(k)) == k);
  CHECK_THROWS_AS(kind_from_name("walk"), ValidationError);
}

TEST_CASE("spec validation") {
  SamplerSpec spec;
  spec.kind = Kind::srw;  // no graph attached
  CHECK_THROWS_WITH_AS(validate_spec(spec, 5), doctest::Contains("graph"),
                       ValidationError);

  spec.graph = shared_graph(Graph::path(3));
  CHECK_THROWS_AS(validate_spec(spec, 5), ValidationError);  // size mismatch
  CHECK_NOTHROW(validate_spec(spec, 3));

  SamplerSpec srrw = walk_spec(Kind::srrw, shared_graph(Graph::complete(3)));
  srrw.beta_exponent = 0.5;  // boundary excluded
  CHECK_THROWS_AS(validate_spec(srrw, 3), ValidationError);
  srrw.beta_exponent = 1.0;
  CHECK_NOTHROW(validate_spec(srrw, 3));
  srrw.alpha = -1.0;
  CHECK_THROWS_AS(validate_spec(srrw, 3), ValidationError);

  SamplerSpec iid;
  CHECK_THROWS_AS(validate_spec(iid, 0), ValidationError);
}

TEST_CASE("iid sampler: in-range, deterministic per seed") {
  SamplerSpec spec;
  Sampler a(spec, 7, 123), b(spec, 7, 123), c(spec, 7, 124);
  bool all_equal = true;
  bool any_diff_seed_diff = false;
  for (int t = 0; t < 200; ++t) {
    const int xa = a.next();
    CHECK(xa >= 0);
    CHECK(xa < 7);
    if (xa != b.next()) all_equal = false;
    if (xa != c.next()) any_diff_seed_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff_seed_diff);
}

TEST_CASE("shuffle sampler: one fixed permutation, replayed exactly") {
  SamplerSpec spec;
  spec.kind = Kind::shuffle;
  Sampler s(spec, 6, 55);
  std::vector<int> first_epoch, second_epoch;
  for (int t = 0; t < 6; ++t) first_epoch.push_back(s.next());
  for (int t = 0; t < 6; ++t) second_epoch.push_back(s.next());

  // each item exactly once per epoch
  CHECK(std::set<int>(first_epoch.begin(), first_epoch.end()).size() == 6);
  // single shuffling: later epochs replay the same order
  CHECK(first_epoch == second_epoch);

  // reproducible per seed
  Sampler s2(spec, 6, 55);
  for (int t = 0; t < 6; ++t) CHECK(s2.next() == first_epoch[std::size_t(t)]);
}

TEST_CASE("srw sampler: moves only along edges") {
  const auto g = shared_graph(Graph::random_connected(10, 0.35, 2));
  Sampler s(walk_spec(Kind::srw, g), 10, 9);
  int prev = s.next();
  for (int t = 0; t < 500; ++t) {
    const int cur = s.next();
    CHECK(g->has_edge(prev, cur));
    prev = cur;
  }
}

TEST_CASE("nbrw sampler: never backtracks when an alternative exists") {
  const auto g = shared_graph(Graph::random_connected(12, 0.4, 5));
  Sampler s(walk_spec(Kind::nbrw, g), 12, 3);
  int two_ago = s.next();
  int prev = s.next();
  CHECK(g->has_edge(two_ago, prev));
  for (int t = 0; t < 2000; ++t) {
    const int cur = s.next();
    CHECK(g->has_edge(prev, cur));
    if (g->degree(prev) > 1) CHECK(cur != two_ago);
    two_ago = prev;
    prev = cur;
  }
}

TEST_CASE("nbrw sampler: ring walk keeps its direction") {
  const auto g = shared_graph(Graph::ring(6));
  Sampler s(walk_spec(Kind::nbrw, g), 6, 77);
  const int x0 = s.next();
  const int x1 = s.next();
  const int dir = ((x1 - x0) % 6 + 6) % 6;  // +1 or +5
  int prev = x1;
  for (int t = 0; t < 100; ++t) {
    const int cur = s.next();
    CHECK(((cur - prev) % 6 + 6) % 6 == dir);
    prev = cur;
  }
}

TEST_CASE("nbrw sampler: dead ends force a backtrack") {
  const auto g = shared_graph(Graph::path(3));
  Sampler s(walk_spec(Kind::nbrw, g), 3, 11);
  std::set<int> visited;
  int prev = s.next();
  visited.insert(prev);
  for (int t = 0; t < 50; ++t) {
    const int cur = s.next();
    CHECK(g->has_edge(prev, cur));
    visited.insert(cur);
    prev = cur;
  }
  CHECK(visited.size() == 3);  // bounces cover the whole path
}

TEST_CASE("srrw sampler: initial measure is uniform") {
  const auto g = shared_graph(Graph::complete(3));
  Sampler s(walk_spec(Kind::srrw, g), 3, 1);
  const Eigen::VectorXd& x = s.empirical_measure();
  for (int v = 0; v < 3; ++v) CHECK(x(v) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("srrw sampler: first measure update uses beta_1 = 2^(-b)") {
  const auto g = shared_graph(Graph::complete(4));
  SamplerSpec spec = walk_spec(Kind::srrw, g);
  spec.beta_exponent = 0.8;
  Sampler s(spec, 4, 31);
  s.next();                 // X0: no measure update
  const int x1 = s.next();  // first move
  const double beta = std::pow(2.0, -0.8);
  const Eigen::VectorXd& x = s.empirical_measure();
  for (int v = 0; v < 4; ++v) {
    const double want = (1.0 - beta) * 0.25 + (v == x1 ? beta : 0.0);
    CHECK(x(v) == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("srrw sampler: alpha = 0 reduces to the srw kernel row") {
  const auto g = shared_graph(Graph::random_connected(8, 0.4, 6));
  SamplerSpec spec = walk_spec(Kind::srrw, g);
  spec.alpha = 0.0;
  Sampler s(spec, 8, 13);
  for (int t = 0; t < 25; ++t) s.next();  // accumulate some measure

  Sampler srw(walk_spec(Kind::srw, g), 8, 13);
  for (int node = 0; node < 8; ++node) {
    const Eigen::VectorXd row = s.transition_row(node);
    const Eigen::VectorXd ref = srw.transition_row(node);
    CHECK((row - ref).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("srrw sampler: measure stays strictly positive on the simplex") {
  const auto g = shared_graph(Graph::random_connected(10, 0.3, 8));
  SamplerSpec spec = walk_spec(Kind::srrw, g);
  Sampler s(spec, 10, 17);
  for (int t = 0; t < 3000; ++t) {
    s.next();
    const Eigen::VectorXd& x = s.empirical_measure();
    CHECK(x.minCoeff() > 0.0);
    CHECK(std::abs(x.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("srrw sampler: moves only along edges, row hooks reject iid") {
  const auto g = shared_graph(Graph::random_connected(9, 0.4, 4));
  Sampler s(walk_spec(Kind::srrw, g), 9, 2);
  int prev = s.next();
  for (int t = 0; t < 300; ++t) {
    const int cur = s.next();
    CHECK(g->has_edge(prev, cur));
    prev = cur;
  }
  SamplerSpec iid;
  Sampler si(iid, 4, 1);
  CHECK_THROWS_AS(si.transition_row(0), ValidationError);
  CHECK_THROWS_AS(si.empirical_measure(), ValidationError);
}

TEST_CASE("stationary weights") {
  SamplerSpec iid;
  CHECK(stationary_weight(iid, 8, 3) == 1.0);

  const auto path = shared_graph(Graph::path(3));
  const SamplerSpec srw = walk_spec(Kind::srw, path);
  // deg_total = 4; interior node deg 2 -> 4/(3*2); endpoints 4/(3*1)
  CHECK(stationary_weight(srw, 3, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(stationary_weight(srw, 3, 0) == doctest::Approx(4.0 / 3.0));

  const SamplerSpec srrw = walk_spec(Kind::srrw, path);
  CHECK((stationary_weights(srrw, 3) - stationary_weights(srw, 3))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("reweighting identity: pi(x) * w(x) = 1/B exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 5 + int(seed);
    const auto g = shared_graph(Graph::random_connected(n, 0.4, seed));
    for (Kind k : {Kind::iid, Kind::srw, Kind::nbrw, Kind::srrw}) {
      SamplerSpec spec;
      spec.kind = k;
      if (is_walk(k)) spec.graph = g;
      const Eigen::VectorXd pi = stationary_law(spec, n);
      const Eigen::VectorXd w = stationary_weights(spec, n);
      for (int v = 0; v < n; ++v)
        CHECK(pi(v) * w(v) == doctest::Approx(1.0 / n).epsilon(1e-14));
    }
  }
}

TEST_CASE("long-run visit frequencies approach the stationary law") {
  // Non-bipartite 10-node graph (verified below) shared by the walk kinds.
  const auto g = shared_graph(Graph::random_connected(10, 0.4, 3));
  REQUIRE(!g->is_bipartite());
  const long horizon = 100000;

  for (Kind k : {Kind::iid, Kind::shuffle, Kind::srw, Kind::nbrw, Kind::srrw}) {
    SamplerSpec spec;
    spec.kind = k;
    if (is_walk(k)) spec.graph = g;
    Sampler s(spec, 10, 91);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(10);
    for (long t = 0; t < horizon; ++t) counts(s.next()) += 1.0;
    const Eigen::VectorXd freq = counts / double(horizon);
    const Eigen::VectorXd target = stationary_law(spec, 10);
    const double tv = 0.5 * (freq - target).cwiseAbs().sum();
    INFO("kind = ", kind_name(k));
    CHECK(tv <= 0.02);
  }
}
