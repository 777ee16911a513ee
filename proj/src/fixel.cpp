#include "fodkit/fixel.hpp"
#include "fodkit/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <thread>

using nlohmann::json;

namespace fodkit {

std::size_t FixelSet::total_fixels() const {
  std::size_t n = 0;
  for (const auto& v : voxels)
    n += v.size();
  return n;
}

Vec3 canonical_direction(const Vec3& d) {
  int dominant = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(d[i]) > std::abs(d[dominant]))
      dominant = i;
  return d[dominant] < 0 ? Vec3(-d) : d;
}

double angular_error_deg(const Vec3& a, const Vec3& b) {
  // identical (or exactly opposite) vectors are exactly zero apart; the dot
  // product alone can round to just below 1 and report a spurious epsilon
  if ((a[0] == b[0] && a[1] == b[1] && a[2] == b[2]) ||
      (a[0] == -b[0] && a[1] == -b[1] && a[2] == -b[2]))
    return 0.0;
  double d = std::clamp(std::abs(a.dot(b)), 0.0, 1.0);
  return std::acos(d) * 180.0 / std::numbers::pi;
}

namespace {

// Segment one voxel's amplitude vector into lobes.
std::vector<Fixel> segment_voxel(const Eigen::VectorXd& amp_raw, const SphereMesh& mesh,
                                 const ExtractOptions& opts) {
  const int nv = mesh.n_vertices();
  Eigen::VectorXd amp = amp_raw.cwiseMax(0.0);

  // Strict local maxima, ties to the lowest vertex index.
  std::vector<char> is_max(std::size_t(nv), 0);
  for (int v = 0; v < nv; ++v) {
    if (amp[v] <= 0)
      continue;
    bool maximal = true;
    for (int nb : mesh.adjacency[std::size_t(v)]) {
      if (amp[nb] > amp[v] || (amp[nb] == amp[v] && nb < v)) {
        maximal = false;
        break;
      }
    }
    is_max[std::size_t(v)] = maximal;
  }

  // Merge antipodal maxima: both map to the lower-index root.
  std::vector<int> root(std::size_t(nv), -1);
  for (int v = 0; v < nv; ++v)
    if (is_max[std::size_t(v)]) {
      int a = mesh.antipode[std::size_t(v)];
      root[std::size_t(v)] = (is_max[std::size_t(a)] && a < v) ? a : v;
    }

  // Steepest-ascent watershed through the adjacency graph.
  std::vector<int> lobe_of(std::size_t(nv), -1);
  std::vector<int> path;
  for (int start = 0; start < nv; ++start) {
    if (amp[start] <= 0 || lobe_of[std::size_t(start)] >= 0)
      continue;
    path.clear();
    int v = start;
    while (lobe_of[std::size_t(v)] < 0) {
      path.push_back(v);
      if (is_max[std::size_t(v)]) {
        lobe_of[std::size_t(v)] = root[std::size_t(v)];
        break;
      }
      int next = -1;
      double best = amp[v];
      for (int nb : mesh.adjacency[std::size_t(v)]) {
        if (amp[nb] > best || (amp[nb] == best && next < 0 && amp[nb] > amp[v])) {
          best = amp[nb];
          next = nb;
        }
      }
      if (next < 0) {
        // Plateau tie: step to the equal-amplitude neighbor with lowest index.
        for (int nb : mesh.adjacency[std::size_t(v)])
          if (amp[nb] == amp[v] && nb < v) {
            next = nb;
            break;
          }
      }
      if (next < 0) {
        lobe_of[std::size_t(v)] = v;  // isolated plateau; own lobe
        break;
      }
      v = next;
    }
    int lobe = lobe_of[std::size_t(v)];
    for (int p : path)
      lobe_of[std::size_t(p)] = lobe;
  }

  // Accumulate per-lobe integral, peak and peak vertex.
  struct Lobe {
    double fd = 0;
    double peak = 0;
    int peak_vertex = -1;
  };
  std::vector<Lobe> lobes;
  std::vector<int> lobe_id(std::size_t(nv), -1);
  for (int v = 0; v < nv; ++v) {
    if (amp[v] <= 0 || lobe_of[std::size_t(v)] < 0)
      continue;
    int r = lobe_of[std::size_t(v)];
    if (lobe_id[std::size_t(r)] < 0) {
      lobe_id[std::size_t(r)] = int(lobes.size());
      lobes.push_back({});
    }
    Lobe& L = lobes[std::size_t(lobe_id[std::size_t(r)])];
    L.fd += amp[v] * mesh.vertex_weight[std::size_t(v)];
    if (amp[v] > L.peak || (amp[v] == L.peak && (L.peak_vertex < 0 || v < L.peak_vertex))) {
      L.peak = amp[v];
      L.peak_vertex = v;
    }
  }

  // Refine each lobe direction below the mesh resolution: amplitude-weighted
  // mean of the lobe's vertices, sign-aligned with the peak vertex.
  std::vector<Vec3> dir_sum(lobes.size(), Vec3::Zero());
  for (int v = 0; v < nv; ++v) {
    if (amp[v] <= 0 || lobe_of[std::size_t(v)] < 0)
      continue;
    int li = lobe_id[std::size_t(lobe_of[std::size_t(v)])];
    const Vec3& peak_dir = mesh.vertices[std::size_t(lobes[std::size_t(li)].peak_vertex)];
    const Vec3& vert = mesh.vertices[std::size_t(v)];
    double w = amp[v] * mesh.vertex_weight[std::size_t(v)];
    dir_sum[std::size_t(li)] += (vert.dot(peak_dir) >= 0 ? w : -w) * vert;
  }

  std::vector<Fixel> out;
  for (std::size_t li = 0; li < lobes.size(); ++li) {
    const auto& L = lobes[li];
    if (L.peak < opts.peak_threshold)
      continue;
    Fixel f;
    Vec3 d = dir_sum[li];
    f.direction = canonical_direction(
        d.norm() > 1e-12 ? Vec3(d.normalized())
                         : mesh.vertices[std::size_t(L.peak_vertex)]);
    f.peak = L.peak;
    f.fd = L.fd;
    out.push_back(f);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Fixel& a, const Fixel& b) { return a.fd > b.fd; });
  if (int(out.size()) > opts.max_fixels)
    out.resize(std::size_t(opts.max_fixels));
  return out;
}

} // namespace

FixelSet extract_fixels(const SHVolume& vol, const Mask& mask, const SphereMesh& mesh,
                        const ExtractOptions& opts) {
  if (vol.dims != mask.dims)
    fail("dim_mismatch", "mask dimensions do not match volume");
  int lmax = lmax_for_ncoef(vol.ncoef);
  if (lmax < 0)
    fail("invalid_ncoef", "volume ncoef is not a valid even-order SH size");
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (mesh.antipode[std::size_t(v)] < 0)
      fail("mesh_not_antipodal", "mesh lacks an antipodal map");

  const Eigen::MatrixXd basis = sh_basis(lmax, mesh.vertices);
  FixelSet out(vol.dims);

  // Voxel-parallel: each voxel writes only its own slot.
  std::vector<std::size_t> work;
  for (int z = 0; z < vol.dims[2]; ++z)
    for (int y = 0; y < vol.dims[1]; ++y)
      for (int x = 0; x < vol.dims[0]; ++x)
        if (mask.at(x, y, z))
          work.push_back(out.index(x, y, z));

  unsigned nthreads = opts.threads > 0 ? unsigned(opts.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<unsigned>(nthreads, std::max<std::size_t>(1, work.size()));

  auto run = [&](std::size_t begin, std::size_t end) {
    const std::size_t nvox = vol.nvoxels();
    Eigen::VectorXd coeffs(vol.ncoef);
    for (std::size_t w = begin; w < end; ++w) {
      std::size_t vi = work[w];
      for (int c = 0; c < vol.ncoef; ++c)
        coeffs[c] = vol.data[vi + nvox * std::size_t(c)];
      Eigen::VectorXd amp = basis * coeffs;
      out.voxels[vi] = segment_voxel(amp, mesh, opts);
    }
  };

  if (nthreads <= 1) {
    run(0, work.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (work.size() + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
      std::size_t b = std::min(std::size_t(t) * chunk, work.size());
      std::size_t e = std::min(b + chunk, work.size());
      if (b < e)
        pool.emplace_back(run, b, e);
    }
    for (auto& th : pool)
      th.join();
  }
  return out;
}

MatchResult match_fixels(const FixelSet& gt, const FixelSet& est, double threshold_deg) {
  if (gt.dims != est.dims)
    fail("dim_mismatch", "fixel set dimensions differ");
  MatchResult res;
  res.dims = gt.dims;
  res.voxels.resize(gt.voxels.size());

  struct Cand {
    double err;
    int gi, ei;
  };
  for (std::size_t vi = 0; vi < gt.voxels.size(); ++vi) {
    const auto& g = gt.voxels[vi];
    const auto& e = est.voxels[vi];
    std::vector<Cand> cands;
    for (int gi = 0; gi < int(g.size()); ++gi)
      for (int ei = 0; ei < int(e.size()); ++ei) {
        double err = angular_error_deg(g[std::size_t(gi)].direction, e[std::size_t(ei)].direction);
        if (err <= threshold_deg)
          cands.push_back({err, gi, ei});
      }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.err != b.err)
        return a.err < b.err;
      if (a.gi != b.gi)
        return a.gi < b.gi;
      return a.ei < b.ei;
    });
    std::vector<char> gused(g.size(), 0), eused(e.size(), 0);
    VoxelMatch& vm = res.voxels[vi];
    for (const auto& c : cands) {
      if (gused[std::size_t(c.gi)] || eused[std::size_t(c.ei)])
        continue;
      gused[std::size_t(c.gi)] = eused[std::size_t(c.ei)] = 1;
      vm.matched.push_back({c.gi, c.ei, c.err});
    }
    for (int gi = 0; gi < int(g.size()); ++gi)
      if (!gused[std::size_t(gi)])
        vm.unmatched_gt.push_back(gi);
    for (int ei = 0; ei < int(e.size()); ++ei)
      if (!eused[std::size_t(ei)])
        vm.unmatched_est.push_back(ei);
  }
  return res;
}

FixelMetrics fixel_metrics(const MatchResult& match, const FixelSet& gt, const FixelSet& est,
                           const Mask& roi, bool normalized) {
  if (match.dims != gt.dims || gt.dims != est.dims || roi.dims != gt.dims)
    fail("dim_mismatch", "match/fixel/roi dimensions differ");
  if (roi.count() == 0)
    fail("empty_roi", "ROI contains no voxels");

  FixelMetrics m;
  double angle_sum = 0, peak_sum = 0, fd_sum = 0;
  for (int z = 0; z < roi.dims[2]; ++z)
    for (int y = 0; y < roi.dims[1]; ++y)
      for (int x = 0; x < roi.dims[0]; ++x) {
        if (!roi.at(x, y, z))
          continue;
        std::size_t vi = match.index(x, y, z);
        const auto& vm = match.voxels[vi];
        const auto& g = gt.voxels[vi];
        const auto& e = est.voxels[vi];
        for (const auto& p : vm.matched) {
          angle_sum += p.angular_error_deg;
          peak_sum += std::abs(e[std::size_t(p.est_index)].peak - g[std::size_t(p.gt_index)].peak);
          fd_sum += std::abs(e[std::size_t(p.est_index)].fd - g[std::size_t(p.gt_index)].fd);
          ++m.n_matched;
        }
        for (int gi : vm.unmatched_gt) {
          peak_sum += g[std::size_t(gi)].peak;
          fd_sum += g[std::size_t(gi)].fd;
          ++m.n_missing;
        }
        for (int ei : vm.unmatched_est) {
          peak_sum += e[std::size_t(ei)].peak;
          fd_sum += e[std::size_t(ei)].fd;
          ++m.n_extra;
        }
      }

  m.mean_angular_error_deg = m.n_matched > 0 ? angle_sum / double(m.n_matched) : 0.0;
  long denom = m.n_matched + m.n_extra + m.n_missing;
  if (normalized && denom > 0) {
    m.peak_error = peak_sum / double(denom);
    m.fd_error = fd_sum / double(denom);
  } else {
    m.peak_error = peak_sum;
    m.fd_error = fd_sum;
  }
  return m;
}

Mask filter_roi_by_fixel_count(const Mask& roi, const FixelSet& gt, int expected) {
  if (roi.dims != gt.dims)
    fail("dim_mismatch", "ROI dimensions do not match fixel set");
  Mask out(roi.dims);
  for (int z = 0; z < roi.dims[2]; ++z)
    for (int y = 0; y < roi.dims[1]; ++y)
      for (int x = 0; x < roi.dims[0]; ++x)
        out.set(x, y, z, roi.at(x, y, z) && int(gt.at(x, y, z).size()) == expected);
  return out;
}

namespace {

template <class T> void append_raw(std::vector<std::uint8_t>& buf, const T& v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

} // namespace

void write_fixels(const FixelSet& fx, const std::string& path) {
  std::uint32_t n = 0;
  for (const auto& v : fx.voxels)
    n += std::uint32_t(v.size());

  std::vector<std::uint8_t> voxel_idx, direction, fd, peak;
  for (int z = 0; z < fx.dims[2]; ++z)
    for (int y = 0; y < fx.dims[1]; ++y)
      for (int x = 0; x < fx.dims[0]; ++x)
        for (const auto& f : fx.at(x, y, z)) {
          append_raw(voxel_idx, std::uint32_t(x));
          append_raw(voxel_idx, std::uint32_t(y));
          append_raw(voxel_idx, std::uint32_t(z));
          for (int c = 0; c < 3; ++c)
            append_raw(direction, float(f.direction[c]));
          append_raw(fd, float(f.fd));
          append_raw(peak, float(f.peak));
        }

  json header;
  header["dims"] = {fx.dims[0], fx.dims[1], fx.dims[2]};
  header["n_fixels"] = n;
  header["dtype"] = "f32le";
  std::size_t off = 0;
  json offsets;
  offsets["voxel_index"] = off;
  off += voxel_idx.size();
  offsets["direction"] = off;
  off += direction.size();
  offsets["fd"] = off;
  off += fd.size();
  offsets["peak"] = off;
  header["offsets"] = offsets;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    fail("io_error", "cannot open " + path + " for writing");
  std::string htext = header.dump();
  std::uint32_t hlen = std::uint32_t(htext.size());
  std::uint8_t lenbuf[4] = {std::uint8_t(hlen & 0xff), std::uint8_t((hlen >> 8) & 0xff),
                            std::uint8_t((hlen >> 16) & 0xff), std::uint8_t((hlen >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(lenbuf), 4);
  out.write(htext.data(), std::streamsize(htext.size()));
  for (const auto* arr : {&voxel_idx, &direction, &fd, &peak})
    out.write(reinterpret_cast<const char*>(arr->data()), std::streamsize(arr->size()));
  if (!out)
    fail("io_error", "write failed for " + path);
}

FixelSet read_fixels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail("file_not_found", "cannot open " + path);
  std::uint8_t lenbuf[4];
  if (!in.read(reinterpret_cast<char*>(lenbuf), 4))
    fail("truncated", path + ": cannot read header length");
  std::uint32_t hlen = std::uint32_t(lenbuf[0]) | (std::uint32_t(lenbuf[1]) << 8) |
                       (std::uint32_t(lenbuf[2]) << 16) | (std::uint32_t(lenbuf[3]) << 24);
  std::string htext(hlen, '\0');
  if (!in.read(htext.data(), hlen))
    fail("truncated", path + ": cannot read header");
  json header = json::parse(htext, nullptr, false);
  if (header.is_discarded())
    fail("malformed_header", path + ": header is not valid JSON");

  FixelSet fx;
  std::uint32_t n = 0;
  try {
    auto dims = header.at("dims").get<std::vector<int>>();
    if (dims.size() != 3)
      fail("malformed_header", path + ": dims must have 3 entries");
    fx = FixelSet({dims[0], dims[1], dims[2]});
    n = header.at("n_fixels").get<std::uint32_t>();
  } catch (const json::exception& e) {
    fail("malformed_header", path + ": " + std::string(e.what()));
  }

  std::vector<std::uint8_t> payload(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>{});
  std::size_t expected = std::size_t(n) * (12 + 12 + 4 + 4);
  if (payload.size() != expected)
    fail("payload_length_mismatch", path + ": payload size " + std::to_string(payload.size()) +
                                        " != " + std::to_string(expected));

  const std::uint8_t* vid = payload.data();
  const std::uint8_t* dir = vid + std::size_t(n) * 12;
  const std::uint8_t* fdp = dir + std::size_t(n) * 12;
  const std::uint8_t* pkp = fdp + std::size_t(n) * 4;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t xyz[3];
    std::memcpy(xyz, vid + std::size_t(i) * 12, 12);
    float d[3], fdv, pkv;
    std::memcpy(d, dir + std::size_t(i) * 12, 12);
    std::memcpy(&fdv, fdp + std::size_t(i) * 4, 4);
    std::memcpy(&pkv, pkp + std::size_t(i) * 4, 4);
    if (int(xyz[0]) >= fx.dims[0] || int(xyz[1]) >= fx.dims[1] || int(xyz[2]) >= fx.dims[2])
      fail("malformed_fixels", path + ": voxel index out of bounds");
    Fixel f;
    f.direction = Vec3(d[0], d[1], d[2]);
    f.fd = fdv;
    f.peak = pkv;
    fx.at(int(xyz[0]), int(xyz[1]), int(xyz[2])).push_back(f);
  }
  return fx;
}

} // namespace fodkit
