#include "fodkit/connectome.hpp"
#include "fodkit/error.hpp"
#include "fodkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fodkit {

DisparityResult disparity(const std::vector<ConnMatrix>& gt_cohort,
                          const std::vector<ConnMatrix>& est_cohort) {
  if (gt_cohort.empty() || gt_cohort.size() != est_cohort.size())
    fail("cohort_mismatch", "paired cohorts must be non-empty and equal length");
  int n = gt_cohort[0].n_nodes;
  for (const auto& m : gt_cohort)
    if (m.n_nodes != n)
      fail("cohort_mismatch", "connectomes disagree on node count");
  for (const auto& m : est_cohort)
    if (m.n_nodes != n)
      fail("cohort_mismatch", "connectomes disagree on node count");

  DisparityResult out;
  out.matrix = ConnMatrix(n);
  double mu_sum = 0;
  long n_edges = long(n) * (n - 1) / 2;
  for (std::size_t s = 0; s < gt_cohort.size(); ++s) {
    double subj_sum = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double d = std::abs(est_cohort[s].at(i, j) - gt_cohort[s].at(i, j));
        out.matrix.at(i, j) += d;
        out.matrix.at(j, i) += d;
        subj_sum += d;
      }
    mu_sum += subj_sum / double(n_edges);
  }
  double inv = 1.0 / double(gt_cohort.size());
  for (auto& w : out.matrix.weights)
    w *= inv;
  out.mu_disparity = mu_sum * inv;
  return out;
}

std::vector<double> upper_triangle(const ConnMatrix& m) {
  std::vector<double> out;
  out.reserve(std::size_t(m.n_nodes) * (m.n_nodes - 1) / 2);
  for (int i = 0; i < m.n_nodes; ++i)
    for (int j = i + 1; j < m.n_nodes; ++j)
      out.push_back(m.at(i, j));
  return out;
}

namespace {

// Merge-sort count of swaps = discordant-ish pairs for Knight's algorithm.
long long merge_count(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo,
                      std::size_t hi) {
  if (hi - lo < 2)
    return 0;
  std::size_t mid = (lo + hi) / 2;
  long long count = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      count += static_cast<long long>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid)
    tmp[k++] = v[i++];
  while (j < hi)
    tmp[k++] = v[j++];
  std::copy(tmp.begin() + long(lo), tmp.begin() + long(hi), v.begin() + long(lo));
  return count;
}

long long tie_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  long long t = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i])
      ++j;
    auto run = static_cast<long long>(j - i);
    t += run * (run - 1) / 2;
    i = j;
  }
  return t;
}

} // namespace

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    fail("length_mismatch", "input vectors differ in length");
  const std::size_t n = a.size();
  if (n < 2)
    fail("insufficient_samples", "Kendall tau needs at least 2 values");

  long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
  long long n1 = tie_pairs(a), n2 = tie_pairs(b);
  if (n1 == n0 || n2 == n0)
    fail("degenerate_input", "all-constant input makes Kendall tau undefined");

  // Knight: sort by a (ties by b), then count exchanges needed to sort by b.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (a[i] != a[j])
      return a[i] < a[j];
    return b[i] < b[j];
  });
  std::vector<double> bs(n);
  for (std::size_t i = 0; i < n; ++i)
    bs[i] = b[order[i]];

  // Joint ties (pairs tied in both a and b).
  long long n3 = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j < n && a[order[j]] == a[order[i]] && bs[j] == bs[i])
        ++j;
      auto run = static_cast<long long>(j - i);
      n3 += run * (run - 1) / 2;
      i = j;
    }
  }

  std::vector<double> tmp(n), work = bs;
  long long swaps = merge_count(work, tmp, 0, n);

  // Discordant = swaps; concordant = n0 - n1 - n2 + n3 - swaps.
  long long concordant = n0 - n1 - n2 + n3 - swaps;
  double num = double(concordant) - double(swaps);
  double den = std::sqrt(double(n0 - n1)) * std::sqrt(double(n0 - n2));
  return num / den;
}

std::vector<char> benjamini_hochberg(const std::vector<double>& p_values, double q) {
  const std::size_t m = p_values.size();
  std::vector<char> sig(m, 0);
  if (m == 0)
    return sig;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
  std::size_t cutoff = 0;  // number of significant hypotheses
  for (std::size_t k = 1; k <= m; ++k)
    if (p_values[order[k - 1]] <= double(k) * q / double(m))
      cutoff = k;
  for (std::size_t k = 0; k < cutoff; ++k)
    sig[order[k]] = 1;
  return sig;
}

EdgeTestResult significant_edge_fraction(const std::vector<ConnMatrix>& gt_cohort,
                                         const std::vector<ConnMatrix>& est_cohort,
                                         double alpha) {
  if (gt_cohort.size() != est_cohort.size())
    fail("cohort_mismatch", "paired cohorts must be equal length");
  if (gt_cohort.size() < 3)
    fail("insufficient_samples", "edge-wise paired t-tests need at least 3 subjects");
  int n = gt_cohort[0].n_nodes;
  for (const auto& m : gt_cohort)
    if (m.n_nodes != n)
      fail("cohort_mismatch", "connectomes disagree on node count");
  for (const auto& m : est_cohort)
    if (m.n_nodes != n)
      fail("cohort_mismatch", "connectomes disagree on node count");

  EdgeTestResult out;
  std::vector<double> diffs(gt_cohort.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      bool all_zero = true;
      for (std::size_t s = 0; s < gt_cohort.size(); ++s) {
        diffs[s] = est_cohort[s].at(i, j) - gt_cohort[s].at(i, j);
        if (diffs[s] != 0)
          all_zero = false;
      }
      if (all_zero)
        continue;  // zero variance, zero mean: not testable
      out.p_values.push_back(paired_ttest(diffs).p);
      out.edges.emplace_back(i, j);
    }

  out.n_tested = long(out.p_values.size());
  out.significant = benjamini_hochberg(out.p_values, alpha);
  out.n_significant = std::count(out.significant.begin(), out.significant.end(), char(1));
  out.fraction = out.n_tested > 0 ? double(out.n_significant) / double(out.n_tested) : 0.0;
  return out;
}

} // namespace fodkit
