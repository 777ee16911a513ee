#include "fodkit/subsample.hpp"
#include "fodkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace fodkit {

double angular_distance(const Vec3& u, const Vec3& v) {
  double d = std::abs(u.dot(v));
  return std::acos(std::clamp(d, 0.0, 1.0));
}

std::vector<int> kennard_stone(const std::vector<Vec3>& shell_dirs, int k) {
  const int n = int(shell_dirs.size());
  if (k < 2)
    fail("invalid_k", "k must be at least 2");
  if (k > n)
    fail("invalid_k", "k = " + std::to_string(k) + " exceeds " + std::to_string(n) +
                          " candidate directions");

  std::vector<double> dist(std::size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      dist[std::size_t(i) * n + j] = dist[std::size_t(j) * n + i] =
          angular_distance(shell_dirs[std::size_t(i)], shell_dirs[std::size_t(j)]);

  // Seed: lexicographically first pair at maximal distance.
  int si = 0, sj = 1;
  double best = -1.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (dist[std::size_t(i) * n + j] > best) {
        best = dist[std::size_t(i) * n + j];
        si = i;
        sj = j;
      }

  std::vector<int> selected = {si, sj};
  std::vector<char> in_set(std::size_t(n), 0);
  in_set[std::size_t(si)] = in_set[std::size_t(sj)] = 1;
  std::vector<double> min_dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    min_dist[std::size_t(i)] =
        std::min(dist[std::size_t(i) * n + si], dist[std::size_t(i) * n + sj]);

  while (int(selected.size()) < k) {
    int pick = -1;
    double best_min = -1.0;
    for (int i = 0; i < n; ++i) {
      if (in_set[std::size_t(i)])
        continue;
      if (min_dist[std::size_t(i)] > best_min) {
        best_min = min_dist[std::size_t(i)];
        pick = i;
      }
    }
    selected.push_back(pick);
    in_set[std::size_t(pick)] = 1;
    for (int i = 0; i < n; ++i)
      min_dist[std::size_t(i)] =
          std::min(min_dist[std::size_t(i)], dist[std::size_t(i) * n + pick]);
  }
  return selected;
}

GradientTable subsample_acquisition(const GradientTable& table, double target_shell_b, int k) {
  if (k < 2)
    fail("invalid_k", "k must be at least 2");
  int shell_idx = table.find_shell(target_shell_b);
  if (shell_idx < 0 || table.shells[std::size_t(shell_idx)].bvalue == 0.0)
    fail("shell_not_found", "no shell near b = " + std::to_string(target_shell_b));
  const auto& shell = table.shells[std::size_t(shell_idx)];
  if (k > int(shell.rows.size()))
    fail("invalid_k", "k exceeds shell size " + std::to_string(shell.rows.size()));

  std::vector<Vec3> dirs;
  dirs.reserve(shell.rows.size());
  for (int r : shell.rows)
    dirs.emplace_back(table.rows[std::size_t(r)].dir[0], table.rows[std::size_t(r)].dir[1],
                      table.rows[std::size_t(r)].dir[2]);
  auto picks = kennard_stone(dirs, k);

  std::vector<char> keep(table.rows.size(), 0);
  for (const auto& s : table.shells)
    if (s.bvalue == 0.0)
      for (int r : s.rows)
        keep[std::size_t(r)] = 1;
  for (int p : picks)
    keep[std::size_t(shell.rows[std::size_t(p)])] = 1;

  GradientTable out;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    if (keep[i])
      out.rows.push_back(table.rows[i]);
  out.cluster_shells();
  return out;
}

} // namespace fodkit
