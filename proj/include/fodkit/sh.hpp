#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace fodkit {

using Vec3 = Eigen::Vector3d;

// Real symmetric SH coefficients, ordered (0,0),(2,-2)..(2,2),(4,-4)..(lmax,lmax).
struct SHCoeffs {
  int lmax = 0;
  Eigen::VectorXd values;

  SHCoeffs() = default;
  SHCoeffs(int l, Eigen::VectorXd v);
};

// Triangulated unit sphere with per-vertex solid-angle quadrature weights,
// vertex adjacency, and the antipodal vertex map.
struct SphereMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<double> vertex_weight;          // steradians; sums to 4*pi
  std::vector<std::vector<int>> adjacency;    // sorted neighbor indices
  std::vector<int> antipode;                  // index of -v for each vertex v

  int n_vertices() const { return int(vertices.size()); }
};

// Basis matrix B[i][j] = Y_j(dir_i), real symmetric convention:
// m=0 -> Nlm Plm(cos t); m>0 -> sqrt(2) Nlm Plm cos(m p); m<0 -> sqrt(2) Nlm Plm sin(|m| p),
// with fully-normalized (orthonormal) Nlm.
Eigen::MatrixXd sh_basis(int lmax, const std::vector<Vec3>& directions);

// B * values at each mesh vertex.
Eigen::VectorXd evaluate_amplitude(const SHCoeffs& coeffs, const SphereMesh& mesh);
Eigen::VectorXd evaluate_amplitude(const SHCoeffs& coeffs, const Eigen::MatrixXd& basis);

// Icosahedron subdivided n times (0 <= n <= 6); 10*4^n + 2 vertices.
SphereMesh make_icosphere(int subdivisions);

void export_mesh_obj(const SphereMesh& mesh, const std::string& path);

} // namespace fodkit
