#include "fodkit/fod_metrics.hpp"
#include "fodkit/error.hpp"

#include <cmath>

namespace fodkit {

PsnrResult psnr(const SHVolume& gt, const SHVolume& est, const Mask& mask) {
  if (gt.dims != est.dims || gt.ncoef != est.ncoef)
    fail("dim_mismatch", "ground truth and estimate shapes differ");
  if (gt.dims != mask.dims)
    fail("dim_mismatch", "mask dimensions do not match volumes");

  const std::size_t nvox = gt.nvoxels();
  double max_abs = 0, sq_sum = 0;
  std::size_t n_terms = 0;
  for (std::size_t vi = 0; vi < nvox; ++vi) {
    if (!mask.data[vi])
      continue;
    for (int c = 0; c < gt.ncoef; ++c) {
      double g = gt.data[vi + nvox * std::size_t(c)];
      double e = est.data[vi + nvox * std::size_t(c)];
      max_abs = std::max(max_abs, std::abs(g));
      sq_sum += (g - e) * (g - e);
      ++n_terms;
    }
  }
  if (n_terms == 0)
    fail("empty_mask", "mask contains no voxels");

  PsnrResult r;
  double mse = sq_sum / double(n_terms);
  if (mse == 0.0) {
    r.infinite = true;
    r.db = std::numeric_limits<double>::infinity();
  } else {
    r.db = 10.0 * std::log10(max_abs * max_abs / mse);
  }
  return r;
}

std::optional<double> angular_correlation(const SHCoeffs& gt_voxel, const SHCoeffs& est_voxel,
                                          bool include_l0) {
  if (gt_voxel.lmax != est_voxel.lmax)
    fail("lmax_mismatch", "coefficient vectors have different lmax");
  int start = include_l0 ? 0 : 1;
  double uv = 0, uu = 0, vv = 0;
  for (int c = start; c < gt_voxel.values.size(); ++c) {
    double u = gt_voxel.values[c], v = est_voxel.values[c];
    uv += u * v;
    uu += u * u;
    vv += v * v;
  }
  if (uu == 0.0 || vv == 0.0)
    return std::nullopt;
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

std::map<std::string, RoiFodEntry> roi_fod_report(const SHVolume& gt, const SHVolume& est,
                                                  const std::map<std::string, Mask>& masks,
                                                  bool include_l0) {
  if (gt.dims != est.dims || gt.ncoef != est.ncoef)
    fail("dim_mismatch", "ground truth and estimate shapes differ");
  int lmax = lmax_for_ncoef(gt.ncoef);
  if (lmax < 0)
    fail("invalid_ncoef", "volume ncoef is not a valid even-order SH size");

  const std::size_t nvox = gt.nvoxels();
  std::map<std::string, RoiFodEntry> report;
  for (const auto& [name, mask] : masks) {
    RoiFodEntry entry;
    if (mask.dims != gt.dims) {
      entry.error = "dim_mismatch";
      report[name] = entry;
      continue;
    }
    entry.n_voxels = mask.count();
    if (entry.n_voxels == 0) {
      entry.error = "empty_mask";
      report[name] = entry;
      continue;
    }
    entry.psnr = psnr(gt, est, mask);

    double r_sum = 0;
    std::size_t r_n = 0;
    SHCoeffs u(lmax, Eigen::VectorXd::Zero(gt.ncoef)), v(lmax, Eigen::VectorXd::Zero(gt.ncoef));
    for (std::size_t vi = 0; vi < nvox; ++vi) {
      if (!mask.data[vi])
        continue;
      for (int c = 0; c < gt.ncoef; ++c) {
        u.values[c] = gt.data[vi + nvox * std::size_t(c)];
        v.values[c] = est.data[vi + nvox * std::size_t(c)];
      }
      if (auto r = angular_correlation(u, v, include_l0)) {
        r_sum += *r;
        ++r_n;
      }
    }
    entry.mean_r_angular = r_n > 0 ? r_sum / double(r_n) : 0.0;
    entry.n_r_voxels = r_n;
    entry.ok = true;
    report[name] = entry;
  }
  return report;
}

} // namespace fodkit
