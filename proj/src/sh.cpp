#include "fodkit/sh.hpp"
#include "fodkit/error.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

namespace fodkit {

namespace {

constexpr double kPi = std::numbers::pi;

// Fully-normalized associated Legendre P-bar_l^m(x) for all even l <= lmax at
// fixed m, via the standard stable upward recurrence. Includes the
// Condon-Shortley phase (cancels in quadratic uses; sign convention only).
// Output indexed by l (only even l >= m are written).
void normalized_plm_column(int lmax, int m, double x, double sx, std::vector<double>& out) {
  // P-bar_m^m
  double pmm = std::sqrt(1.0 / (4.0 * kPi));
  for (int k = 1; k <= m; ++k)
    pmm *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * sx;
  double p_prev = pmm;                                   // l = m
  double p_curr = x * std::sqrt(2.0 * m + 3.0) * pmm;    // l = m + 1
  if (m % 2 == 0)
    out[std::size_t(m)] = p_prev;
  if (m + 1 <= lmax && (m + 1) % 2 == 0)
    out[std::size_t(m) + 1] = p_curr;
  for (int l = m + 2; l <= lmax; ++l) {
    double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
    double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                         (4.0 * double(l - 1) * (l - 1) - 1.0));
    double p_next = a * (x * p_curr - b * p_prev);
    p_prev = p_curr;
    p_curr = p_next;
    if (l % 2 == 0)
      out[std::size_t(l)] = p_curr;
  }
}

} // namespace

SHCoeffs::SHCoeffs(int l, Eigen::VectorXd v) : lmax(l), values(std::move(v)) {
  if (lmax < 0 || lmax % 2 != 0)
    fail("invalid_lmax", "lmax must be a non-negative even integer");
  if (values.size() != (lmax + 1) * (lmax + 2) / 2)
    fail("invalid_coeffs", "coefficient count does not match lmax");
}

Eigen::MatrixXd sh_basis(int lmax, const std::vector<Vec3>& directions) {
  if (lmax < 0 || lmax % 2 != 0 || lmax > 8)
    fail("invalid_lmax", "lmax must be even and in [0, 8]");
  const int ncoef = (lmax + 1) * (lmax + 2) / 2;
  Eigen::MatrixXd B(directions.size(), ncoef);

  std::vector<double> plm(std::size_t(lmax) + 1);
  for (int i = 0; i < int(directions.size()); ++i) {
    const Vec3& d = directions[std::size_t(i)];
    if (std::abs(d.norm() - 1.0) > 1e-6)
      fail("non_unit_direction", "direction " + std::to_string(i) + " is not unit length");
    double ct = d.z();
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    double phi = std::atan2(d.y(), d.x());

    int col = 0;
    for (int l = 0; l <= lmax; l += 2) {
      for (int m = -l; m <= l; ++m) {
        int am = std::abs(m);
        normalized_plm_column(lmax, am, ct, st, plm);
        double p = plm[std::size_t(l)];
        double v;
        if (m == 0)
          v = p;
        else if (m > 0)
          v = std::sqrt(2.0) * p * std::cos(m * phi);
        else
          v = std::sqrt(2.0) * p * std::sin(am * phi);
        B(i, col++) = v;
      }
    }
  }
  return B;
}

Eigen::VectorXd evaluate_amplitude(const SHCoeffs& coeffs, const Eigen::MatrixXd& basis) {
  if (basis.cols() != coeffs.values.size())
    fail("lmax_mismatch", "basis columns do not match coefficient count");
  return basis * coeffs.values;
}

Eigen::VectorXd evaluate_amplitude(const SHCoeffs& coeffs, const SphereMesh& mesh) {
  return evaluate_amplitude(coeffs, sh_basis(coeffs.lmax, mesh.vertices));
}

namespace {

double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  // Van Oosterom & Strackee: tan(E/2) = |a.(b x c)| / (1 + a.b + b.c + c.a)
  double num = std::abs(a.dot(b.cross(c)));
  double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

} // namespace

SphereMesh make_icosphere(int subdivisions) {
  if (subdivisions < 0 || subdivisions > 6)
    fail("invalid_subdivision", "subdivisions must be in [0, 6]");

  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts)
    v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end())
        return it->second;
      Vec3 m = (verts[std::size_t(a)] + verts[std::size_t(b)]).normalized();
      verts.push_back(m);
      int idx = int(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  SphereMesh mesh;
  mesh.vertices = std::move(verts);
  mesh.faces = std::move(faces);

  const int nv = mesh.n_vertices();
  mesh.vertex_weight.assign(std::size_t(nv), 0.0);
  mesh.adjacency.assign(std::size_t(nv), {});
  for (const auto& f : mesh.faces) {
    double area = spherical_triangle_area(mesh.vertices[std::size_t(f[0])],
                                          mesh.vertices[std::size_t(f[1])],
                                          mesh.vertices[std::size_t(f[2])]);
    for (int k = 0; k < 3; ++k) {
      mesh.vertex_weight[std::size_t(f[k])] += area / 3.0;
      int a = f[k], b = f[(k + 1) % 3];
      mesh.adjacency[std::size_t(a)].push_back(b);
      mesh.adjacency[std::size_t(b)].push_back(a);
    }
  }
  for (auto& nbrs : mesh.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }

  mesh.antipode.assign(std::size_t(nv), -1);
  // The icosahedron is centrally symmetric and edge midpoints of antipodal
  // edges stay antipodal, so every vertex has an exact antipode.
  std::map<std::array<long long, 3>, int> lookup;
  auto quantize = [](const Vec3& v) {
    return std::array<long long, 3>{llround(v.x() * 1e9), llround(v.y() * 1e9),
                                    llround(v.z() * 1e9)};
  };
  for (int i = 0; i < nv; ++i)
    lookup[quantize(mesh.vertices[std::size_t(i)])] = i;
  for (int i = 0; i < nv; ++i) {
    auto it = lookup.find(quantize(-mesh.vertices[std::size_t(i)]));
    if (it == lookup.end())
      fail("mesh_not_antipodal", "icosphere lost antipodal symmetry");
    mesh.antipode[std::size_t(i)] = it->second;
  }
  return mesh;
}

void export_mesh_obj(const SphereMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    fail("io_error", "cannot open " + path + " for writing");
  for (const auto& v : mesh.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& f : mesh.faces)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

} // namespace fodkit
