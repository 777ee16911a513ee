#pragma once

#include "fodkit/sh.hpp"
#include "fodkit/volume.hpp"

#include <map>
#include <optional>
#include <string>

namespace fodkit {

struct PsnrResult {
  double db = 0;
  bool infinite = false;  // MSE was exactly zero
};

// 10*log10(MAX^2/MSE); MAX = max |gt| inside the mask, MSE over all masked
// voxels and coefficients.
PsnrResult psnr(const SHVolume& gt, const SHVolume& est, const Mask& mask);

// Normalized coefficient dot product in [-1,1]; the l=0 term is excluded
// unless include_l0. Empty when either side has zero norm on the summed range.
std::optional<double> angular_correlation(const SHCoeffs& gt_voxel, const SHCoeffs& est_voxel,
                                          bool include_l0 = false);

struct RoiFodEntry {
  bool ok = false;
  std::string error;
  PsnrResult psnr;
  double mean_r_angular = 0;
  std::size_t n_voxels = 0;       // masked voxels
  std::size_t n_r_voxels = 0;     // voxels contributing to the r mean
};

// Per-mask PSNR and mean voxelwise angular correlation. An empty mask flags
// its entry; the others are still computed.
std::map<std::string, RoiFodEntry> roi_fod_report(const SHVolume& gt, const SHVolume& est,
                                                  const std::map<std::string, Mask>& masks,
                                                  bool include_l0 = false);

} // namespace fodkit
