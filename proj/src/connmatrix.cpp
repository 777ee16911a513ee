#include "fodkit/connmatrix.hpp"
#include "fodkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fodkit {

ConnMatrix::ConnMatrix(int n) : n_nodes(n), weights(std::size_t(n) * n, 0.0) {
  labels.reserve(n);
  if (n == 84) {
    labels = dk84_labels();
  } else {
    for (int i = 0; i < n; ++i)
      labels.push_back("n" + std::to_string(i));
  }
}

void ConnMatrix::validate() const {
  if (n_nodes <= 0 || weights.size() != std::size_t(n_nodes) * n_nodes)
    fail("invalid_connmatrix", "weights size does not match n_nodes");
  for (int i = 0; i < n_nodes; ++i) {
    if (at(i, i) != 0.0)
      fail("invalid_connmatrix", "nonzero diagonal at node " + std::to_string(i));
    for (int j = 0; j < n_nodes; ++j) {
      double w = at(i, j);
      if (!std::isfinite(w))
        fail("non_finite", "non-finite weight");
      if (w < 0)
        fail("negative_weight", "negative weight at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      if (w != at(j, i))
        fail("invalid_connmatrix", "asymmetric weights");
    }
  }
}

const std::vector<std::string>& dk84_labels() {
  static const std::vector<std::string> labels = {
      "L.BSTS", "L.CACG", "L.CMFG", "L.CU",   "L.EC",   "L.FG",   "L.IPG",  "L.ITG",
      "L.ICG",  "L.LOG",  "L.LOFG", "L.LG",   "L.MOFG", "L.MTG",  "L.PHIG", "L.PaCG",
      "L.POP",  "L.POR",  "L.PTR",  "L.PCAL", "L.PoCG", "L.PCG",  "L.PrCG", "L.PCU",
      "L.RACG", "L.RMFG", "L.SFG",  "L.SPG",  "L.STG",  "L.SMG",  "L.FP",   "L.TP",
      "L.TTG",  "L.IN",   "L.CER",  "L.TH",   "L.CA",   "L.PU",   "L.PA",   "L.HI",
      "L.AM",   "L.AC",   "R.TH",   "R.CA",   "R.PU",   "R.PA",   "R.HI",   "R.AM",
      "R.AC",   "R.BSTS", "R.CACG", "R.CMFG", "R.CU",   "R.EC",   "R.FG",   "R.IPG",
      "R.ITG",  "R.ICG",  "R.LOG",  "R.LOFG", "R.LG",   "R.MOFG", "R.MTG",  "R.PHIG",
      "R.PaCG", "R.POP",  "R.POR",  "R.PTR",  "R.PCAL", "R.PoCG", "R.PCG",  "R.PrCG",
      "R.PCU",  "R.RACG", "R.RMFG", "R.SFG",  "R.SPG",  "R.STG",  "R.SMG",  "R.FP",
      "R.TP",   "R.TTG",  "R.IN",   "R.CER"};
  return labels;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto b = tok.find_first_not_of(" \t\r");
    auto e = tok.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : tok.substr(b, e - b + 1));
  }
  return out;
}

bool is_number(const std::string& s) {
  if (s.empty())
    return false;
  try {
    std::size_t pos = 0;
    (void)std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

} // namespace

ConnMatrix read_connmatrix(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fail("file_not_found", "cannot open " + path);

  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    lines.push_back(split_csv_line(line));
  }
  if (lines.empty())
    fail("malformed_csv", path + ": empty file");

  std::vector<std::string> labels;
  std::size_t first = 0;
  if (!lines[0].empty() && !is_number(lines[0][0])) {
    labels = lines[0];
    first = 1;
  }

  std::size_t n = lines.size() - first;
  ConnMatrix m;
  m.n_nodes = int(n);
  m.weights.assign(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = lines[first + r];
    if (row.size() != n)
      fail("non_square", path + ": row " + std::to_string(r) + " has " +
                             std::to_string(row.size()) + " columns, expected " +
                             std::to_string(n));
    for (std::size_t c = 0; c < n; ++c) {
      if (!is_number(row[c]))
        fail("non_numeric", path + ": non-numeric value '" + row[c] + "'");
      double w = std::stod(row[c]);
      if (!std::isfinite(w))
        fail("non_finite", path + ": non-finite weight");
      if (w < 0)
        fail("negative_weight", path + ": negative weight " + row[c]);
      m.weights[r * n + c] = w;
    }
  }

  // Symmetrize by averaging; warn if the asymmetry is more than numeric noise.
  double max_w = 0, max_asym = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      max_w = std::max({max_w, m.weights[i * n + j], m.weights[j * n + i]});
      max_asym = std::max(max_asym, std::abs(m.weights[i * n + j] - m.weights[j * n + i]));
    }
  if (max_w > 0 && max_asym > 1e-6 * max_w)
    std::cerr << "warning: " << path << ": asymmetry up to " << max_asym
              << " averaged away\n";
  for (std::size_t i = 0; i < n; ++i) {
    m.weights[i * n + i] = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double w = 0.5 * (m.weights[i * n + j] + m.weights[j * n + i]);
      m.weights[i * n + j] = m.weights[j * n + i] = w;
    }
  }

  if (!labels.empty() && labels.size() == n) {
    m.labels = labels;
  } else if (n == 84) {
    m.labels = dk84_labels();
  } else {
    for (std::size_t i = 0; i < n; ++i)
      m.labels.push_back("n" + std::to_string(i));
  }
  m.validate();
  return m;
}

void write_connmatrix(const ConnMatrix& m, const std::string& path) {
  m.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    fail("io_error", "cannot open " + path + " for writing");
  for (int i = 0; i < m.n_nodes; ++i)
    out << m.labels[i] << (i + 1 < m.n_nodes ? ',' : '\n');
  out.precision(17);
  for (int i = 0; i < m.n_nodes; ++i)
    for (int j = 0; j < m.n_nodes; ++j)
      out << m.at(i, j) << (j + 1 < m.n_nodes ? ',' : '\n');
  if (!out)
    fail("io_error", "write failed for " + path);
}

} // namespace fodkit
