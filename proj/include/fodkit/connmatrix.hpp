#pragma once

#include <string>
#include <vector>

namespace fodkit {

// Symmetric weighted connectivity matrix with node labels.
struct ConnMatrix {
  int n_nodes = 0;
  std::vector<double> weights;  // row-major n x n
  std::vector<std::string> labels;

  ConnMatrix() = default;
  explicit ConnMatrix(int n);

  double& at(int i, int j) { return weights[std::size_t(i) * n_nodes + j]; }
  double at(int i, int j) const { return weights[std::size_t(i) * n_nodes + j]; }

  // Throws on asymmetry, nonzero diagonal, negative or non-finite weights.
  void validate() const;
};

// Desikan-Killiany 84-node short labels (L.BSTS .. R.CER).
const std::vector<std::string>& dk84_labels();

// CSV of n x n numeric values, optional leading label row. Input is
// symmetrized by averaging and the diagonal forced to zero.
ConnMatrix read_connmatrix(const std::string& path);
void write_connmatrix(const ConnMatrix& m, const std::string& path);

} // namespace fodkit
