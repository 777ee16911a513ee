#pragma once

#include "fodkit/connmatrix.hpp"

#include <vector>

namespace fodkit {

struct GraphMetrics {
  double global_efficiency = 0;
  double transitivity = 0;
  double density = 0;
  double assortativity = 0;
  double mean_betweenness = 0;
  double modularity = 0;
  double mean_strength = 0;
  double mean_degree = 0;
  double mean_clustering = 0;
  double mean_local_efficiency = 0;
  bool disconnected = false;
};

struct GraphOptions {
  bool normalized_betweenness = false;  // divide by (n-1)(n-2)/2
  bool weighted_assortativity = false;  // strength instead of binary degree
  unsigned louvain_seed = 0;            // first of 10 restart seeds
  int louvain_restarts = 10;
};

// Weighted-undirected conventions throughout: connection length = 1/weight
// for path metrics, cube-root weight products for triangle metrics, binary
// graph for density/degree. Unreachable pairs contribute zero efficiency.
GraphMetrics graph_metrics(const ConnMatrix& m, const GraphOptions& opts = {});

// All-pairs shortest path lengths with L_ij = 1/w_ij (Dijkstra per source).
// Unreachable pairs hold +infinity.
std::vector<std::vector<double>> shortest_path_lengths(const ConnMatrix& m);

// Brandes betweenness on the weighted graph, halved so each unordered pair
// counts once.
std::vector<double> betweenness_centrality(const ConnMatrix& m);

// Louvain with a seeded restart; returns the community of each node.
struct LouvainResult {
  std::vector<int> community;
  double q = 0;
};
LouvainResult louvain(const ConnMatrix& m, unsigned seed);

// Newman Q of a given partition.
double modularity_of_partition(const ConnMatrix& m, const std::vector<int>& community);

// DR = (est - gt)/gt * 100. Errors when gt is zero.
double difference_ratio(double est_value, double gt_value);

} // namespace fodkit
