#pragma once

#include "fodkit/fixel.hpp"
#include "fodkit/sh.hpp"
#include "fodkit/volume.hpp"

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testutil {

inline std::string temp_path(const std::string& stem) {
  static int counter = 0;
  return (std::filesystem::temp_directory_path() /
          (stem + "." + std::to_string(::getpid()) + "." + std::to_string(counter++)))
      .string();
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& stem) : path(temp_path(stem)) {}
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }
};

inline fodkit::SHVolume random_volume(std::array<int, 3> dims, int ncoef, unsigned seed) {
  fodkit::SHVolume v(dims, ncoef);
  std::mt19937 rng(seed);
  std::normal_distribution<float> dist(0.f, 1.f);
  for (auto& x : v.data)
    x = dist(rng);
  return v;
}

inline fodkit::Vec3 random_unit(std::mt19937& rng) {
  std::normal_distribution<double> d;
  fodkit::Vec3 v{d(rng), d(rng), d(rng)};
  while (v.norm() < 1e-6)
    v = {d(rng), d(rng), d(rng)};
  return v.normalized();
}

// Projects an antipodally symmetric amplitude function onto the even SH basis
// with fine quadrature. Independent of the library's fixel machinery: only the
// basis and mesh weights are reused.
template <typename Fn>
fodkit::SHCoeffs project_function(Fn&& amplitude, int lmax, const fodkit::SphereMesh& mesh) {
  Eigen::MatrixXd basis = fodkit::sh_basis(lmax, mesh.vertices);
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis.cols());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    double a = amplitude(mesh.vertices[std::size_t(v)]);
    coeffs += mesh.vertex_weight[std::size_t(v)] * a * basis.row(v).transpose();
  }
  return fodkit::SHCoeffs(lmax, coeffs);
}

// Sharp symmetric lobe along `dir`: |u.dir|^power.
inline fodkit::SHCoeffs fiber_coeffs(const std::vector<fodkit::Vec3>& dirs, int lmax,
                                     const fodkit::SphereMesh& mesh, double power = 40.0) {
  return project_function(
      [&](const fodkit::Vec3& u) {
        double a = 0;
        for (const auto& d : dirs)
          a += std::pow(std::abs(u.dot(d)), power);
        return a;
      },
      lmax, mesh);
}

inline fodkit::SHVolume volume_from_coeffs(std::array<int, 3> dims,
                                           const fodkit::SHCoeffs& coeffs) {
  fodkit::SHVolume vol(dims, int(coeffs.values.size()));
  for (int c = 0; c < vol.ncoef; ++c)
    for (int z = 0; z < dims[2]; ++z)
      for (int y = 0; y < dims[1]; ++y)
        for (int x = 0; x < dims[0]; ++x)
          vol.at(x, y, z, c) = float(coeffs.values[c]);
  return vol;
}

} // namespace testutil
