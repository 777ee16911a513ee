#include "fodkit/enhance.hpp"
#include "fodkit/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

using nlohmann::json;

namespace fodkit {

namespace {
constexpr double kStdFloor = 1e-8;
}

CoeffStats compute_stats(const SHVolume& vol, const Mask& mask) {
  if (vol.dims != mask.dims)
    fail("dim_mismatch", "mask dimensions do not match volume");
  std::size_t n = mask.count();
  if (n == 0)
    fail("empty_mask", "mask contains no voxels");

  const std::size_t nvox = vol.nvoxels();
  CoeffStats s;
  s.mean.assign(std::size_t(vol.ncoef), 0.0);
  s.std.assign(std::size_t(vol.ncoef), 0.0);
  for (int c = 0; c < vol.ncoef; ++c) {
    double sum = 0;
    for (std::size_t vi = 0; vi < nvox; ++vi)
      if (mask.data[vi])
        sum += vol.data[vi + nvox * std::size_t(c)];
    double mean = sum / double(n);
    double sq = 0;
    for (std::size_t vi = 0; vi < nvox; ++vi)
      if (mask.data[vi]) {
        double d = vol.data[vi + nvox * std::size_t(c)] - mean;
        sq += d * d;
      }
    s.mean[std::size_t(c)] = mean;
    s.std[std::size_t(c)] = std::max(std::sqrt(sq / double(n)), kStdFloor);
  }
  return s;
}

SHVolume standardize(const SHVolume& vol, const CoeffStats& stats) {
  if (int(stats.mean.size()) != vol.ncoef)
    fail("ncoef_mismatch", "stats length does not match volume ncoef");
  SHVolume out = vol;
  const std::size_t nvox = vol.nvoxels();
  for (int c = 0; c < vol.ncoef; ++c) {
    float m = float(stats.mean[std::size_t(c)]), s = float(stats.std[std::size_t(c)]);
    for (std::size_t vi = 0; vi < nvox; ++vi)
      out.data[vi + nvox * std::size_t(c)] = (vol.data[vi + nvox * std::size_t(c)] - m) / s;
  }
  return out;
}

SHVolume rescale(const SHVolume& vol, const CoeffStats& stats) {
  if (int(stats.mean.size()) != vol.ncoef)
    fail("ncoef_mismatch", "stats length does not match volume ncoef");
  SHVolume out = vol;
  const std::size_t nvox = vol.nvoxels();
  for (int c = 0; c < vol.ncoef; ++c) {
    float m = float(stats.mean[std::size_t(c)]), s = float(stats.std[std::size_t(c)]);
    for (std::size_t vi = 0; vi < nvox; ++vi)
      out.data[vi + nvox * std::size_t(c)] = vol.data[vi + nvox * std::size_t(c)] * s + m;
  }
  return out;
}

PatchGrid plan_patches(const std::array<int, 3>& dims, int patch_size, int stride) {
  PatchGrid g;
  g.patch_size = patch_size;
  g.stride = stride;
  for (int axis = 0; axis < 3; ++axis) {
    if (dims[std::size_t(axis)] < patch_size)
      fail("dims_too_small", "axis " + std::to_string(axis) + " smaller than patch size " +
                                 std::to_string(patch_size) + " (pad first)");
    auto& offs = g.axis_offsets[std::size_t(axis)];
    int off = 0;
    while (off + patch_size < dims[std::size_t(axis)]) {
      offs.push_back(off);
      off += stride;
    }
    int last = dims[std::size_t(axis)] - patch_size;
    if (offs.empty() || offs.back() != last)
      offs.push_back(last);
  }
  for (int ox : g.axis_offsets[0])
    for (int oy : g.axis_offsets[1])
      for (int oz : g.axis_offsets[2])
        g.offsets.push_back({ox, oy, oz});
  std::sort(g.offsets.begin(), g.offsets.end());
  return g;
}

Enhancer identity_enhancer() {
  return [](const SHVolume& patch) { return patch; };
}

SHVolume LinearEnhancer::operator()(const SHVolume& patch) const {
  if (W.rows() != patch.ncoef || W.cols() != patch.ncoef || b.size() != patch.ncoef)
    fail("ncoef_mismatch", "linear enhancer size does not match patch ncoef");
  SHVolume out = patch;
  const std::size_t nvox = patch.nvoxels();
  Eigen::VectorXd x(patch.ncoef);
  for (std::size_t vi = 0; vi < nvox; ++vi) {
    for (int c = 0; c < patch.ncoef; ++c)
      x[c] = patch.data[vi + nvox * std::size_t(c)];
    Eigen::VectorXd y = W * x + b;
    for (int c = 0; c < patch.ncoef; ++c)
      out.data[vi + nvox * std::size_t(c)] = float(y[c]);
  }
  return out;
}

Enhancer external_process_enhancer(const std::string& command, const std::string& tmp_dir) {
  return [command, tmp_dir](const SHVolume& patch) {
    static int counter = 0;
    std::string in_path = tmp_dir + "/patch_in_" + std::to_string(counter) + ".fvf";
    std::string out_path = tmp_dir + "/patch_out_" + std::to_string(counter) + ".fvf";
    ++counter;
    write_native_volume(patch, in_path);
    std::string cmd = command + " " + in_path + " " + out_path;
    int rc = std::system(cmd.c_str());
    if (rc != 0)
      fail("enhancer_failed", "external enhancer exited with status " + std::to_string(rc));
    SHVolume out = read_native_volume(out_path);
    std::remove(in_path.c_str());
    std::remove(out_path.c_str());
    return out;
  };
}

namespace {

SHVolume zero_pad(const SHVolume& vol, const std::array<int, 3>& target) {
  if (vol.dims == target)
    return vol;
  SHVolume out(target, vol.ncoef, vol.voxel_size);
  out.affine = vol.affine;
  const std::size_t nvox_in = vol.nvoxels(), nvox_out = out.nvoxels();
  for (int c = 0; c < vol.ncoef; ++c)
    for (int z = 0; z < vol.dims[2]; ++z)
      for (int y = 0; y < vol.dims[1]; ++y)
        for (int x = 0; x < vol.dims[0]; ++x)
          out.data[out.index(x, y, z, 0) + nvox_out * std::size_t(c)] =
              vol.data[vol.index(x, y, z, 0) + nvox_in * std::size_t(c)];
  return out;
}

} // namespace

SHVolume enhance(const SHVolume& vol, const Mask& mask, const CoeffStats& stats,
                 const Enhancer& enhancer, const EnhanceOptions& opts) {
  if (vol.dims != mask.dims)
    fail("dim_mismatch", "mask dimensions do not match volume");
  if (int(stats.mean.size()) != vol.ncoef)
    fail("ncoef_mismatch", "stats length does not match volume ncoef");

  std::array<int, 3> padded_dims = {std::max(vol.dims[0], opts.patch_size),
                                    std::max(vol.dims[1], opts.patch_size),
                                    std::max(vol.dims[2], opts.patch_size)};
  SHVolume work = zero_pad(standardize(vol, stats), padded_dims);
  PatchGrid grid = plan_patches(padded_dims, opts.patch_size, opts.stride);

  const std::size_t nvox = work.nvoxels();
  std::vector<double> accum(work.data.size(), 0.0);
  std::vector<std::uint32_t> count(nvox, 0);
  const int P = opts.patch_size;

  for (const auto& off : grid.offsets) {
    SHVolume patch({P, P, P}, vol.ncoef, vol.voxel_size);
    const std::size_t pvox = patch.nvoxels();
    for (int c = 0; c < vol.ncoef; ++c)
      for (int z = 0; z < P; ++z)
        for (int y = 0; y < P; ++y)
          for (int x = 0; x < P; ++x)
            patch.data[patch.index(x, y, z, 0) + pvox * std::size_t(c)] =
                work.data[work.index(off[0] + x, off[1] + y, off[2] + z, 0) +
                          nvox * std::size_t(c)];

    SHVolume result = enhancer(patch);
    if (result.dims != patch.dims || result.ncoef != patch.ncoef)
      fail("enhancer_shape_mismatch", "enhancer returned a different patch shape");

    for (int c = 0; c < vol.ncoef; ++c)
      for (int z = 0; z < P; ++z)
        for (int y = 0; y < P; ++y)
          for (int x = 0; x < P; ++x) {
            std::size_t wi = work.index(off[0] + x, off[1] + y, off[2] + z, 0);
            accum[wi + nvox * std::size_t(c)] +=
                result.data[result.index(x, y, z, 0) + pvox * std::size_t(c)];
            if (c == 0)
              ++count[wi];
          }
  }

  for (std::size_t vi = 0; vi < nvox; ++vi) {
    if (count[vi] == 0)
      fail("coverage_gap", "patch grid left a voxel uncovered");
    for (int c = 0; c < vol.ncoef; ++c)
      work.data[vi + nvox * std::size_t(c)] =
          float(accum[vi + nvox * std::size_t(c)] / double(count[vi]));
  }

  SHVolume rescaled = rescale(work, stats);

  SHVolume out = vol;  // outside-mask voxels stay bit-identical
  const std::size_t nvox_out = out.nvoxels();
  for (int c = 0; c < vol.ncoef; ++c)
    for (int z = 0; z < vol.dims[2]; ++z)
      for (int y = 0; y < vol.dims[1]; ++y)
        for (int x = 0; x < vol.dims[0]; ++x)
          if (mask.at(x, y, z))
            out.data[out.index(x, y, z, 0) + nvox_out * std::size_t(c)] =
                rescaled.data[rescaled.index(x, y, z, 0) + nvox * std::size_t(c)];
  return out;
}

LinearEnhancer fit_linear_enhancer(const SHVolume& lq, const SHVolume& gt, const Mask& mask,
                                   double ridge) {
  if (lq.dims != gt.dims || lq.ncoef != gt.ncoef)
    fail("dim_mismatch", "paired volumes must share dims and ncoef");
  if (lq.dims != mask.dims)
    fail("dim_mismatch", "mask dimensions do not match volumes");
  const int nc = lq.ncoef;
  std::size_t n = mask.count();
  if (n < std::size_t(nc) + 1)
    fail("insufficient_samples", "fewer masked voxels than ncoef + 1");

  // Both sides standardized with the input stats, so a model applied inside
  // enhance() (which rescales with those same stats) lands in gt space.
  CoeffStats stats_lq = compute_stats(lq, mask);
  SHVolume x_std = standardize(lq, stats_lq);
  SHVolume y_std = standardize(gt, stats_lq);

  // Normal equations over [x; 1] with a small ridge.
  const std::size_t nvox = lq.nvoxels();
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(nc + 1, nc + 1);
  Eigen::MatrixXd xty = Eigen::MatrixXd::Zero(nc + 1, nc);
  Eigen::VectorXd xi(nc + 1);
  xi[nc] = 1.0;
  for (std::size_t vi = 0; vi < nvox; ++vi) {
    if (!mask.data[vi])
      continue;
    for (int c = 0; c < nc; ++c)
      xi[c] = x_std.data[vi + nvox * std::size_t(c)];
    xtx.noalias() += xi * xi.transpose();
    for (int c = 0; c < nc; ++c)
      xty.col(c).noalias() += xi * double(y_std.data[vi + nvox * std::size_t(c)]);
  }
  xtx.diagonal().array() += ridge;
  Eigen::MatrixXd sol = xtx.ldlt().solve(xty);  // (nc+1) x nc

  LinearEnhancer e;
  e.W = sol.topRows(nc).transpose();
  e.b = sol.row(nc).transpose();
  return e;
}

void write_linear_enhancer(const LinearEnhancer& e, const CoeffStats& stats,
                           const std::string& path) {
  json j;
  j["ncoef"] = e.W.rows();
  std::vector<double> w;
  for (int i = 0; i < e.W.rows(); ++i)
    for (int c = 0; c < e.W.cols(); ++c)
      w.push_back(e.W(i, c));
  j["W"] = w;
  j["b"] = std::vector<double>(e.b.data(), e.b.data() + e.b.size());
  j["stats"] = {{"mean", stats.mean}, {"std", stats.std}};
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    fail("io_error", "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fail("file_not_found", "cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded())
    fail("malformed_json", path + ": not valid JSON");
  return j;
}

} // namespace

LinearEnhancer read_linear_enhancer(const std::string& path) {
  json j = load_json(path);
  LinearEnhancer e;
  try {
    int nc = j.at("ncoef").get<int>();
    auto w = j.at("W").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    if (int(w.size()) != nc * nc || int(b.size()) != nc)
      fail("malformed_json", path + ": W/b sizes do not match ncoef");
    e.W.resize(nc, nc);
    for (int i = 0; i < nc; ++i)
      for (int c = 0; c < nc; ++c)
        e.W(i, c) = w[std::size_t(i) * nc + std::size_t(c)];
    e.b = Eigen::Map<Eigen::VectorXd>(b.data(), nc);
  } catch (const json::exception& ex) {
    fail("malformed_json", path + ": " + std::string(ex.what()));
  }
  return e;
}

CoeffStats read_linear_enhancer_stats(const std::string& path) {
  json j = load_json(path);
  CoeffStats s;
  try {
    s.mean = j.at("stats").at("mean").get<std::vector<double>>();
    s.std = j.at("stats").at("std").get<std::vector<double>>();
  } catch (const json::exception& ex) {
    fail("malformed_json", path + ": " + std::string(ex.what()));
  }
  return s;
}

} // namespace fodkit
