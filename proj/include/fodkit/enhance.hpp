#pragma once

#include "fodkit/volume.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace fodkit {

// Per-coefficient mean/std over masked voxels; std floored at 1e-8.
struct CoeffStats {
  std::vector<double> mean;
  std::vector<double> std;
};

CoeffStats compute_stats(const SHVolume& vol, const Mask& mask);
SHVolume standardize(const SHVolume& vol, const CoeffStats& stats);
SHVolume rescale(const SHVolume& vol, const CoeffStats& stats);

// Stride-32 sliding-window offsets over 64^3 patches; the last offset per
// axis is clamped to dims - 64 so every voxel is covered.
struct PatchGrid {
  int patch_size = 64;
  int stride = 32;
  std::array<std::vector<int>, 3> axis_offsets;
  std::vector<std::array<int, 3>> offsets;  // lexicographic
};

PatchGrid plan_patches(const std::array<int, 3>& dims, int patch_size = 64, int stride = 32);

// Maps a standardized patch to a same-shape patch.
using Enhancer = std::function<SHVolume(const SHVolume&)>;

Enhancer identity_enhancer();

// Per-voxel affine map in standardized space.
struct LinearEnhancer {
  Eigen::MatrixXd W;  // ncoef x ncoef
  Eigen::VectorXd b;

  SHVolume operator()(const SHVolume& patch) const;
};

LinearEnhancer read_linear_enhancer(const std::string& path);
void write_linear_enhancer(const LinearEnhancer& e, const CoeffStats& stats,
                           const std::string& path);
CoeffStats read_linear_enhancer_stats(const std::string& path);

// Runs `command <patch_in> <patch_out>` per patch, native volume format.
Enhancer external_process_enhancer(const std::string& command, const std::string& tmp_dir);

struct EnhanceOptions {
  int patch_size = 64;
  int stride = 32;
};

// standardize -> enhance per patch -> average overlaps -> rescale; voxels
// outside the mask keep their input values bit-exactly. Volumes smaller than
// the patch size are zero-padded internally.
SHVolume enhance(const SHVolume& vol, const Mask& mask, const CoeffStats& stats,
                 const Enhancer& enhancer, const EnhanceOptions& opts = {});

// Ridge least squares fit of gt ~ W * lq + b over standardized masked voxels.
LinearEnhancer fit_linear_enhancer(const SHVolume& lq, const SHVolume& gt, const Mask& mask,
                                   double ridge = 1e-8);

} // namespace fodkit
