#include "fodkit/gradients.hpp"
#include "fodkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fodkit {

namespace {

std::vector<std::vector<double>> read_numeric_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fail("file_not_found", "cannot open " + path);
  std::vector<std::vector<double>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#')
      continue;
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size())
          throw std::invalid_argument(tok);
        row.push_back(v);
      } catch (const std::exception&) {
        fail("non_numeric", path + ": non-numeric token '" + tok + "'");
      }
    }
    if (!row.empty())
      out.push_back(std::move(row));
  }
  return out;
}

void normalize_row(GradientTable::Row& r, double b0_threshold) {
  double n = std::sqrt(r.dir[0] * r.dir[0] + r.dir[1] * r.dir[1] + r.dir[2] * r.dir[2]);
  if (r.bval < b0_threshold || n == 0.0) {
    if (r.bval < b0_threshold)
      return;  // keep whatever direction was given for b0 rows; unused downstream
    fail("zero_direction", "zero direction on a non-b0 row");
  }
  if (std::abs(n - 1.0) >= 1e-4)
    for (auto& c : r.dir)
      c /= n;
}

} // namespace

void GradientTable::cluster_shells(double b0_threshold, double shell_tolerance) {
  shells.clear();
  std::map<long long, Shell> by_key;
  for (int i = 0; i < int(rows.size()); ++i) {
    long long key;
    if (rows[i].bval < b0_threshold)
      key = -1;
    else
      key = llround(rows[i].bval / shell_tolerance);
    by_key[key].rows.push_back(i);
  }
  for (auto& [key, shell] : by_key) {
    double sum = 0;
    for (int i : shell.rows)
      sum += rows[i].bval;
    shell.bvalue = key < 0 ? 0.0 : sum / double(shell.rows.size());
    shells.push_back(std::move(shell));
  }
  std::sort(shells.begin(), shells.end(),
            [](const Shell& a, const Shell& b) { return a.bvalue < b.bvalue; });
}

int GradientTable::find_shell(double b, double shell_tolerance) const {
  int best = -1;
  double best_d = shell_tolerance;
  for (int s = 0; s < int(shells.size()); ++s) {
    double d = std::abs(shells[s].bvalue - b);
    if (d <= best_d) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

GradientTable read_gradients_fsl(const std::string& bvecs_path, const std::string& bvals_path) {
  auto vecs = read_numeric_rows(bvecs_path);
  auto vals = read_numeric_rows(bvals_path);
  if (vecs.size() != 3)
    fail("malformed_gradients", bvecs_path + ": expected 3 rows, got " + std::to_string(vecs.size()));
  if (vals.size() != 1)
    fail("malformed_gradients", bvals_path + ": expected 1 row, got " + std::to_string(vals.size()));
  std::size_t n = vals[0].size();
  if (vecs[0].size() != n || vecs[1].size() != n || vecs[2].size() != n)
    fail("column_count_mismatch", "bvecs columns (" + std::to_string(vecs[0].size()) +
                                      ") != bvals columns (" + std::to_string(n) + ")");
  GradientTable t;
  t.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.rows[i].dir = {vecs[0][i], vecs[1][i], vecs[2][i]};
    t.rows[i].bval = vals[0][i];
    normalize_row(t.rows[i], 50.0);
  }
  t.cluster_shells();
  return t;
}

GradientTable read_gradients_mrtrix(const std::string& path) {
  auto rows = read_numeric_rows(path);
  GradientTable t;
  t.rows.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 4)
      fail("malformed_gradients", path + ": row " + std::to_string(i) + " has " +
                                      std::to_string(rows[i].size()) + " columns, expected 4");
    t.rows[i].dir = {rows[i][0], rows[i][1], rows[i][2]};
    t.rows[i].bval = rows[i][3];
    normalize_row(t.rows[i], 50.0);
  }
  t.cluster_shells();
  return t;
}

void write_gradients_fsl(const GradientTable& t, const std::string& bvecs_path,
                         const std::string& bvals_path) {
  std::ofstream vec(bvecs_path, std::ios::trunc), val(bvals_path, std::ios::trunc);
  if (!vec || !val)
    fail("io_error", "cannot open gradient output files");
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      vec << (i ? " " : "") << t.rows[i].dir[axis];
    vec << "\n";
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    val << (i ? " " : "") << t.rows[i].bval;
  val << "\n";
}

void write_gradients_mrtrix(const GradientTable& t, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    fail("io_error", "cannot open " + path + " for writing");
  for (const auto& r : t.rows)
    out << r.dir[0] << " " << r.dir[1] << " " << r.dir[2] << " " << r.bval << "\n";
}

} // namespace fodkit
