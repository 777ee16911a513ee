#pragma once

#include "fodkit/connmatrix.hpp"

#include <vector>

namespace fodkit {

struct DisparityResult {
  ConnMatrix matrix;       // |est - gt| per edge, averaged over subjects
  double mu_disparity = 0; // subject-wise mean of per-subject mean edge disparity
};

DisparityResult disparity(const std::vector<ConnMatrix>& gt_cohort,
                          const std::vector<ConnMatrix>& est_cohort);

// Kendall tau-b (tie corrected) via Knight's O(n log n) algorithm.
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

// Upper-triangle weights, row-major order.
std::vector<double> upper_triangle(const ConnMatrix& m);

struct EdgeTestResult {
  double fraction = 0;     // significant / tested
  long n_tested = 0;
  long n_significant = 0;
  std::vector<double> p_values;       // per tested edge
  std::vector<std::pair<int, int>> edges;  // (i,j) per tested edge
  std::vector<char> significant;      // per tested edge, after BH
};

// Paired t-test of est-gt per upper-triangle edge across subjects, with
// Benjamini-Hochberg control at q = alpha. Edges with zero variance and zero
// mean difference are excluded from testing.
EdgeTestResult significant_edge_fraction(const std::vector<ConnMatrix>& gt_cohort,
                                         const std::vector<ConnMatrix>& est_cohort,
                                         double alpha = 0.05);

// Benjamini-Hochberg: boolean significance per p-value at level q.
std::vector<char> benjamini_hochberg(const std::vector<double>& p_values, double q);

} // namespace fodkit
