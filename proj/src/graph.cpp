#include "fodkit/graph.hpp"
#include "fodkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stack>

namespace fodkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<std::pair<int, double>>> adjacency_list(const ConnMatrix& m) {
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(m.n_nodes));
  for (int i = 0; i < m.n_nodes; ++i)
    for (int j = 0; j < m.n_nodes; ++j)
      if (i != j && m.at(i, j) > 0)
        adj[std::size_t(i)].emplace_back(j, m.at(i, j));
  return adj;
}

// Single-source Dijkstra over lengths 1/w.
void dijkstra(const std::vector<std::vector<std::pair<int, double>>>& adj, int src,
              std::vector<double>& dist) {
  const int n = int(adj.size());
  dist.assign(std::size_t(n), kInf);
  dist[std::size_t(src)] = 0;
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  pq.emplace(0.0, src);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[std::size_t(u)])
      continue;
    for (auto [v, w] : adj[std::size_t(u)]) {
      double nd = d + 1.0 / w;
      if (nd < dist[std::size_t(v)]) {
        dist[std::size_t(v)] = nd;
        pq.emplace(nd, v);
      }
    }
  }
}

double global_efficiency_of(const std::vector<std::vector<double>>& dist, bool* disconnected) {
  const int n = int(dist.size());
  if (n < 2)
    return 0;
  double sum = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j)
        continue;
      if (std::isinf(dist[std::size_t(i)][std::size_t(j)])) {
        if (disconnected)
          *disconnected = true;
        continue;  // unreachable pairs contribute 0
      }
      sum += 1.0 / dist[std::size_t(i)][std::size_t(j)];
    }
  return sum / (double(n) * (n - 1));
}

} // namespace

std::vector<std::vector<double>> shortest_path_lengths(const ConnMatrix& m) {
  auto adj = adjacency_list(m);
  std::vector<std::vector<double>> dist(static_cast<std::size_t>(m.n_nodes));
  for (int s = 0; s < m.n_nodes; ++s)
    dijkstra(adj, s, dist[std::size_t(s)]);
  return dist;
}

std::vector<double> betweenness_centrality(const ConnMatrix& m) {
  const int n = m.n_nodes;
  auto adj = adjacency_list(m);
  std::vector<double> bc(std::size_t(n), 0.0);

  // Brandes (2001) with Dijkstra; dependency accumulation per source.
  for (int s = 0; s < n; ++s) {
    std::vector<double> dist(std::size_t(n), kInf), sigma(std::size_t(n), 0.0),
        delta(std::size_t(n), 0.0);
    std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));
    std::vector<int> order;
    dist[std::size_t(s)] = 0;
    sigma[std::size_t(s)] = 1;
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    pq.emplace(0.0, s);
    std::vector<char> done(std::size_t(n), 0);
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (done[std::size_t(u)])
        continue;
      done[std::size_t(u)] = 1;
      order.push_back(u);
      for (auto [v, w] : adj[std::size_t(u)]) {
        double nd = d + 1.0 / w;
        if (nd < dist[std::size_t(v)] - 1e-15 * std::max(1.0, std::abs(nd))) {
          dist[std::size_t(v)] = nd;
          sigma[std::size_t(v)] = sigma[std::size_t(u)];
          pred[std::size_t(v)] = {u};
          pq.emplace(nd, v);
        } else if (std::abs(nd - dist[std::size_t(v)]) <=
                   1e-15 * std::max(1.0, std::abs(nd))) {
          sigma[std::size_t(v)] += sigma[std::size_t(u)];
          pred[std::size_t(v)].push_back(u);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int w = *it;
      for (int v : pred[std::size_t(w)])
        delta[std::size_t(v)] +=
            sigma[std::size_t(v)] / sigma[std::size_t(w)] * (1.0 + delta[std::size_t(w)]);
      if (w != s)
        bc[std::size_t(w)] += delta[std::size_t(w)];
    }
  }
  for (auto& b : bc)
    b *= 0.5;  // undirected: each pair counted from both endpoints
  return bc;
}

double modularity_of_partition(const ConnMatrix& m, const std::vector<int>& community) {
  const int n = m.n_nodes;
  std::vector<double> strength(std::size_t(n), 0.0);
  double two_m = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      strength[std::size_t(i)] += m.at(i, j);
      two_m += m.at(i, j);
    }
  if (two_m == 0)
    return 0;
  double q = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (community[std::size_t(i)] == community[std::size_t(j)])
        q += m.at(i, j) - strength[std::size_t(i)] * strength[std::size_t(j)] / two_m;
  return q / two_m;
}

namespace {

// One Louvain level: local moving until no gain, on an aggregated graph
// given as adjacency with self-loops allowed.
struct AggGraph {
  int n;
  std::vector<std::vector<std::pair<int, double>>> adj;  // includes self-loops
  std::vector<double> strength;                          // incl. 2x self-loop
  double two_m = 0;
};

AggGraph aggregate(const AggGraph& g, const std::vector<int>& community, int ncomm) {
  AggGraph out;
  out.n = ncomm;
  std::vector<std::vector<double>> w(std::size_t(ncomm), std::vector<double>(std::size_t(ncomm), 0.0));
  for (int i = 0; i < g.n; ++i)
    for (auto [j, wij] : g.adj[std::size_t(i)]) {
      int ci = community[std::size_t(i)], cj = community[std::size_t(j)];
      w[std::size_t(ci)][std::size_t(cj)] += wij;
    }
  out.adj.assign(std::size_t(ncomm), {});
  out.strength.assign(std::size_t(ncomm), 0.0);
  for (int a = 0; a < ncomm; ++a)
    for (int b = 0; b < ncomm; ++b)
      if (w[std::size_t(a)][std::size_t(b)] > 0) {
        out.adj[std::size_t(a)].emplace_back(b, w[std::size_t(a)][std::size_t(b)]);
        out.strength[std::size_t(a)] += w[std::size_t(a)][std::size_t(b)];
        out.two_m += w[std::size_t(a)][std::size_t(b)];
      }
  return out;
}

} // namespace

LouvainResult louvain(const ConnMatrix& m, unsigned seed) {
  const int n0 = m.n_nodes;
  AggGraph g;
  g.n = n0;
  g.adj.assign(std::size_t(n0), {});
  g.strength.assign(std::size_t(n0), 0.0);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n0; ++j)
      if (m.at(i, j) > 0) {
        g.adj[std::size_t(i)].emplace_back(j, m.at(i, j));
        g.strength[std::size_t(i)] += m.at(i, j);
        g.two_m += m.at(i, j);
      }

  std::vector<int> node_to_final(static_cast<std::size_t>(n0));
  std::iota(node_to_final.begin(), node_to_final.end(), 0);
  std::mt19937 rng(seed);

  if (g.two_m == 0) {
    LouvainResult r;
    r.community = node_to_final;
    r.q = 0;
    return r;
  }

  bool improved_any = true;
  while (improved_any) {
    improved_any = false;
    std::vector<int> comm(static_cast<std::size_t>(g.n));
    std::iota(comm.begin(), comm.end(), 0);
    std::vector<double> comm_strength = g.strength;  // sum of strengths per community
    std::vector<int> visit(static_cast<std::size_t>(g.n));
    std::iota(visit.begin(), visit.end(), 0);
    std::shuffle(visit.begin(), visit.end(), rng);

    bool moved = true;
    while (moved) {
      moved = false;
      for (int u : visit) {
        int cu = comm[std::size_t(u)];
        // Weight from u to each neighboring community (self-loops excluded
        // from the gain term).
        std::vector<std::pair<int, double>> links;
        for (auto [v, w] : g.adj[std::size_t(u)]) {
          if (v == u)
            continue;
          int cv = comm[std::size_t(v)];
          bool found = false;
          for (auto& [c, acc] : links)
            if (c == cv) {
              acc += w;
              found = true;
              break;
            }
          if (!found)
            links.emplace_back(cv, w);
        }
        double ku = g.strength[std::size_t(u)];
        comm_strength[std::size_t(cu)] -= ku;
        double w_cu = 0;
        for (auto& [c, w] : links)
          if (c == cu)
            w_cu = w;
        double best_gain = 0;
        int best_comm = cu;
        for (auto& [c, w] : links) {
          double gain = (w - w_cu) - ku * (comm_strength[std::size_t(c)] -
                                           comm_strength[std::size_t(cu)]) / g.two_m;
          if (gain > best_gain + 1e-12) {
            best_gain = gain;
            best_comm = c;
          }
        }
        comm_strength[std::size_t(best_comm)] += ku;
        if (best_comm != cu) {
          comm[std::size_t(u)] = best_comm;
          moved = true;
          improved_any = true;
        }
      }
    }

    // Renumber communities densely.
    std::vector<int> renum(std::size_t(g.n), -1);
    int ncomm = 0;
    for (auto& c : comm) {
      if (renum[std::size_t(c)] < 0)
        renum[std::size_t(c)] = ncomm++;
      c = renum[std::size_t(c)];
    }
    if (ncomm == g.n)
      break;
    for (auto& f : node_to_final)
      f = comm[std::size_t(f)];
    g = aggregate(g, comm, ncomm);
  }

  LouvainResult r;
  r.community = node_to_final;
  r.q = modularity_of_partition(m, r.community);
  return r;
}

double difference_ratio(double est_value, double gt_value) {
  if (gt_value == 0.0)
    fail("zero_reference", "difference ratio undefined for zero reference value");
  return (est_value - gt_value) / gt_value * 100.0;
}

GraphMetrics graph_metrics(const ConnMatrix& m, const GraphOptions& opts) {
  m.validate();
  const int n = m.n_nodes;
  GraphMetrics out;
  if (n < 2)
    fail("invalid_connmatrix", "graph metrics need at least 2 nodes");

  // Binary degree, strength, edge count.
  std::vector<double> degree(std::size_t(n), 0.0), strength(std::size_t(n), 0.0);
  long n_edges = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && m.at(i, j) > 0) {
        degree[std::size_t(i)] += 1;
        strength[std::size_t(i)] += m.at(i, j);
        if (i < j)
          ++n_edges;
      }
  out.density = double(n_edges) / (double(n) * (n - 1) / 2.0);
  out.mean_degree = std::accumulate(degree.begin(), degree.end(), 0.0) / n;
  out.mean_strength = std::accumulate(strength.begin(), strength.end(), 0.0) / n;

  // Triangle metrics with cube-root weights (Onnela form).
  double cyc3_total = 0, ktri_total = 0, clustering_sum = 0;
  for (int i = 0; i < n; ++i) {
    double cyc3 = 0;
    for (int j = 0; j < n; ++j)
      for (int h = 0; h < n; ++h) {
        if (j == i || h == i || j == h)
          continue;
        double wij = m.at(i, j), wih = m.at(i, h), wjh = m.at(j, h);
        if (wij > 0 && wih > 0 && wjh > 0)
          cyc3 += std::cbrt(wij * wih * wjh);
      }
    double k = degree[std::size_t(i)];
    cyc3_total += cyc3;
    ktri_total += k * (k - 1);
    if (k >= 2)
      clustering_sum += cyc3 / (k * (k - 1));
  }
  out.transitivity = ktri_total > 0 ? cyc3_total / ktri_total : 0.0;
  out.mean_clustering = clustering_sum / n;

  // Path metrics.
  auto dist = shortest_path_lengths(m);
  out.global_efficiency = global_efficiency_of(dist, &out.disconnected);

  auto bc = betweenness_centrality(m);
  out.mean_betweenness = std::accumulate(bc.begin(), bc.end(), 0.0) / n;
  if (opts.normalized_betweenness && n > 2)
    out.mean_betweenness /= double(n - 1) * (n - 2) / 2.0;

  // Local efficiency: subgraph of each node's neighbors, cube-root form.
  double le_sum = 0;
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
    auto sd = shortest_path_lengths(sub);
    double num = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        if (a == b || std::isinf(sd[std::size_t(a)][std::size_t(b)]))
          continue;
        double wua = m.at(u, nbrs[std::size_t(a)]);
        double wub = m.at(u, nbrs[std::size_t(b)]);
        num += std::cbrt(wua * wub / sd[std::size_t(a)][std::size_t(b)]);
      }
    le_sum += num / (double(k) * (k - 1));
  }
  out.mean_local_efficiency = le_sum / n;

  // Assortativity: Pearson over edge endpoint degrees (both orientations).
  {
    const std::vector<double>& d = opts.weighted_assortativity ? strength : degree;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    long cnt = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && m.at(i, j) > 0) {
          double x = d[std::size_t(i)], y = d[std::size_t(j)];
          sx += x;
          sy += y;
          sxx += x * x;
          syy += y * y;
          sxy += x * y;
          ++cnt;
        }
    double varx = sxx - sx * sx / cnt, vary = syy - sy * sy / cnt;
    double cov = sxy - sx * sy / cnt;
    out.assortativity = (cnt > 0 && varx > 0 && vary > 0) ? cov / std::sqrt(varx * vary) : 0.0;
  }

  // Modularity: best Q over seeded Louvain restarts.
  {
    double best_q = -1;
    for (int r = 0; r < opts.louvain_restarts; ++r) {
      auto res = louvain(m, opts.louvain_seed + unsigned(r));
      if (res.q > best_q)
        best_q = res.q;
    }
    out.modularity = best_q;
  }
  return out;
}

} // namespace fodkit
