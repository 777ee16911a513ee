#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fodkit/error.hpp"
#include "fodkit/graph.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace fodkit;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ConnMatrix random_graph(std::mt19937& rng, int max_nodes, bool unit_weights) {
  int n = 2 + int(rng() % unsigned(max_nodes - 1));
  ConnMatrix m(n);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < 0.6) {
        double v = unit_weights ? 1.0 : w(rng);
        m.at(i, j) = m.at(j, i) = v;
      }
  return m;
}

// Floyd-Warshall over lengths 1/w.
std::vector<std::vector<double>> fw_lengths(const ConnMatrix& m) {
  int n = m.n_nodes;
  std::vector<std::vector<double>> d(std::size_t(n), std::vector<double>(std::size_t(n), kInf));
  for (int i = 0; i < n; ++i) {
    d[std::size_t(i)][std::size_t(i)] = 0;
    for (int j = 0; j < n; ++j)
      if (i != j && m.at(i, j) > 0)
        d[std::size_t(i)][std::size_t(j)] = 1.0 / m.at(i, j);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d[std::size_t(i)][std::size_t(j)] = std::min(
            d[std::size_t(i)][std::size_t(j)],
            d[std::size_t(i)][std::size_t(k)] + d[std::size_t(k)][std::size_t(j)]);
  return d;
}

// Exhaustive simple-path enumeration: for the pair (s,t), accumulate the
// number of shortest paths and, per intermediate node, the number passing
// through it.
struct PathCount {
  double sigma = 0;
  std::vector<double> through;
};

void enumerate_paths(const ConnMatrix& m, int t, std::vector<int>& path,
                     std::vector<char>& used, double len, double best, PathCount& pc) {
  int u = path.back();
  if (u == t) {
    if (std::abs(len - best) <= 1e-9 * std::max(1.0, best)) {
      pc.sigma += 1;
      for (std::size_t i = 1; i + 1 < path.size(); ++i)
        pc.through[std::size_t(path[i])] += 1;
    }
    return;
  }
  if (len > best + 1e-9 * std::max(1.0, best))
    return;
  for (int v = 0; v < m.n_nodes; ++v)
    if (!used[std::size_t(v)] && m.at(u, v) > 0) {
      used[std::size_t(v)] = 1;
      path.push_back(v);
      enumerate_paths(m, t, path, used, len + 1.0 / m.at(u, v), best, pc);
      path.pop_back();
      used[std::size_t(v)] = 0;
    }
}

std::vector<double> brute_betweenness(const ConnMatrix& m) {
  int n = m.n_nodes;
  auto d = fw_lengths(m);
  std::vector<double> bc(std::size_t(n), 0.0);
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      if (std::isinf(d[std::size_t(s)][std::size_t(t)]))
        continue;
      PathCount pc;
      pc.through.assign(std::size_t(n), 0.0);
      std::vector<int> path = {s};
      std::vector<char> used(std::size_t(n), 0);
      used[std::size_t(s)] = 1;
      enumerate_paths(m, t, path, used, 0.0, d[std::size_t(s)][std::size_t(t)], pc);
      for (int v = 0; v < n; ++v)
        if (v != s && v != t && pc.through[std::size_t(v)] > 0)
          bc[std::size_t(v)] += pc.through[std::size_t(v)] / pc.sigma;
    }
  return bc;
}

double brute_global_efficiency(const ConnMatrix& m) {
  int n = m.n_nodes;
  auto d = fw_lengths(m);
  double sum = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && !std::isinf(d[std::size_t(i)][std::size_t(j)]))
        sum += 1.0 / d[std::size_t(i)][std::size_t(j)];
  return sum / (double(n) * (n - 1));
}

double brute_local_efficiency(const ConnMatrix& m) {
  int n = m.n_nodes;
  double total = 0;
  for (int u = 0; u < n; ++u) {
    std::vector<int> nbrs;
    for (int v = 0; v < n; ++v)
      if (v != u && m.at(u, v) > 0)
        nbrs.push_back(v);
    int k = int(nbrs.size());
    if (k < 2)
      continue;
    ConnMatrix sub(k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b)
          sub.at(a, b) = m.at(nbrs[std::size_t(a)], nbrs[std::size_t(b)]);
    auto sd = fw_lengths(sub);
    double num = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b && !std::isinf(sd[std::size_t(a)][std::size_t(b)]))
          num += std::cbrt(m.at(u, nbrs[std::size_t(a)]) * m.at(u, nbrs[std::size_t(b)]) /
                           sd[std::size_t(a)][std::size_t(b)]);
    total += num / (double(k) * (k - 1));
  }
  return total / n;
}

} // namespace

TEST_CASE("path-graph betweenness: middle node scores 1") {
  ConnMatrix m(3);
  m.at(0, 1) = m.at(1, 0) = 1.0;
  m.at(1, 2) = m.at(2, 1) = 1.0;
  auto bc = betweenness_centrality(m);
  CHECK(bc[0] == doctest::Approx(0.0).scale(1.0));
  CHECK(bc[1] == doctest::Approx(1.0));
  CHECK(bc[2] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("shortest paths use 1/w lengths") {
  ConnMatrix m(3);
  m.at(0, 1) = m.at(1, 0) = 4.0;   // length 0.25
  m.at(1, 2) = m.at(2, 1) = 4.0;   // length 0.25
  m.at(0, 2) = m.at(2, 0) = 1.0;   // direct length 1.0
  auto d = shortest_path_lengths(m);
  CHECK(d[0][2] == doctest::Approx(0.5));  // two strong hops beat one weak edge
}

TEST_CASE("graph metrics match exhaustive oracles on random graphs") {
  std::mt19937 rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    ConnMatrix m = random_graph(rng, 7, rep % 2 == 0);
    auto got = graph_metrics(m);
    auto bc = betweenness_centrality(m);
    auto expect_bc = brute_betweenness(m);
    REQUIRE(bc.size() == expect_bc.size());
    for (std::size_t i = 0; i < bc.size(); ++i)
      CHECK(bc[i] == doctest::Approx(expect_bc[i]).epsilon(1e-9).scale(1.0));
    CHECK(got.global_efficiency ==
          doctest::Approx(brute_global_efficiency(m)).epsilon(1e-9).scale(1.0));
    CHECK(got.mean_local_efficiency ==
          doctest::Approx(brute_local_efficiency(m)).epsilon(1e-9).scale(1.0));

    // distances against Floyd-Warshall
    auto d = shortest_path_lengths(m);
    auto fw = fw_lengths(m);
    for (int i = 0; i < m.n_nodes; ++i)
      for (int j = 0; j < m.n_nodes; ++j) {
        if (std::isinf(fw[std::size_t(i)][std::size_t(j)]))
          CHECK(std::isinf(d[std::size_t(i)][std::size_t(j)]));
        else
          CHECK(d[std::size_t(i)][std::size_t(j)] ==
                doctest::Approx(fw[std::size_t(i)][std::size_t(j)]).epsilon(1e-12));
      }
  }
}

TEST_CASE("density, degree and transitivity on a hand example") {
  // triangle plus a pendant node
  ConnMatrix m(4);
  m.at(0, 1) = m.at(1, 0) = 1.0;
  m.at(1, 2) = m.at(2, 1) = 1.0;
  m.at(0, 2) = m.at(2, 0) = 1.0;
  m.at(2, 3) = m.at(3, 2) = 1.0;
  auto g = graph_metrics(m);
  CHECK(g.density == doctest::Approx(4.0 / 6.0));
  CHECK(g.mean_degree == doctest::Approx((2 + 2 + 3 + 1) / 4.0));
  // unit weights: transitivity = 3*triangles*2 / sum k(k-1) = 6/(2+2+6+0)
  CHECK(g.transitivity == doctest::Approx(6.0 / 10.0));
  CHECK(g.mean_clustering == doctest::Approx((1.0 + 1.0 + 2.0 / 6.0 + 0.0) / 4.0));
  CHECK_FALSE(g.disconnected);
}

TEST_CASE("disconnected graphs are flagged and contribute zero efficiency") {
  ConnMatrix m(4);
  m.at(0, 1) = m.at(1, 0) = 1.0;
  m.at(2, 3) = m.at(3, 2) = 1.0;
  auto g = graph_metrics(m);
  CHECK(g.disconnected);
  CHECK(g.global_efficiency == doctest::Approx(4.0 / 12.0));
}

TEST_CASE("modularity is self-consistent and best-of-restarts") {
  // two dense blocks with one weak bridge
  std::mt19937 rng(5);
  ConnMatrix m(10);
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j)
      m.at(i, j) = m.at(j, i) = 1.0;
  for (int i = 5; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j)
      m.at(i, j) = m.at(j, i) = 1.0;
  m.at(0, 5) = m.at(5, 0) = 0.1;
  auto r = louvain(m, 0);
  CHECK(r.q == doctest::Approx(modularity_of_partition(m, r.community)).epsilon(1e-12));
  CHECK(r.q > 0.4);  // the two blocks should be found
  std::vector<int> trivial(10, 0);
  CHECK(modularity_of_partition(m, trivial) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  auto g = graph_metrics(m);
  CHECK(g.modularity >= r.q - 1e-12);
}

TEST_CASE("assortativity of a star is -1") {
  ConnMatrix m(5);
  for (int i = 1; i < 5; ++i)
    m.at(0, i) = m.at(i, 0) = 1.0;
  auto g = graph_metrics(m);
  CHECK(g.assortativity == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("difference ratio matches the published table") {
  CHECK(difference_ratio(0.8469, 0.8494) == doctest::Approx(-0.29).epsilon(0.05));
  CHECK(difference_ratio(4447.0388, 5566.7768) == doctest::Approx(-20.11).epsilon(0.01));
  CHECK(difference_ratio(400.9858, 545.9997) == doctest::Approx(-26.56).epsilon(0.001));
  CHECK_THROWS_AS(difference_ratio(1.0, 0.0), Error);
}

TEST_CASE("normalized betweenness option") {
  ConnMatrix m(3);
  m.at(0, 1) = m.at(1, 0) = 1.0;
  m.at(1, 2) = m.at(2, 1) = 1.0;
  GraphOptions opts;
  opts.normalized_betweenness = true;
  auto g = graph_metrics(m, opts);
  auto plain = graph_metrics(m);
  CHECK(g.mean_betweenness == doctest::Approx(plain.mean_betweenness / 1.0));  // (n-1)(n-2)/2 = 1
}
