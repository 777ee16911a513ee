#pragma once

#include "fodkit/sh.hpp"
#include "fodkit/volume.hpp"

#include <string>
#include <vector>

namespace fodkit {

// One discrete fiber population within a voxel: a lobe of the FOD.
struct Fixel {
  Vec3 direction{0, 0, 1};  // unit, antipodally canonical
  double peak = 0;          // max amplitude in the lobe
  double fd = 0;            // lobe integral, amplitude * steradian
};

// Per-voxel fixel lists, sorted by descending fd.
struct FixelSet {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::vector<Fixel>> voxels;  // index = x + X*(y + Y*z)

  FixelSet() = default;
  explicit FixelSet(std::array<int, 3> d)
      : dims(d), voxels(std::size_t(d[0]) * d[1] * d[2]) {}

  std::size_t index(int x, int y, int z) const {
    return std::size_t(x) + std::size_t(dims[0]) * (std::size_t(y) + std::size_t(dims[1]) * z);
  }
  const std::vector<Fixel>& at(int x, int y, int z) const { return voxels[index(x, y, z)]; }
  std::vector<Fixel>& at(int x, int y, int z) { return voxels[index(x, y, z)]; }
  std::size_t total_fixels() const;
};

struct ExtractOptions {
  double peak_threshold = 0.10;
  int max_fixels = 10;
  int threads = 0;  // 0 = hardware concurrency
};

// FOD lobe segmentation on the mesh: clamp negative amplitudes, find strict
// local maxima, merge antipodal pairs, watershed every positive vertex to a
// maximum by steepest ascent, integrate per lobe.
FixelSet extract_fixels(const SHVolume& vol, const Mask& mask, const SphereMesh& mesh,
                        const ExtractOptions& opts = {});

// Greedy one-to-one matching in ascending angular error under the threshold.
struct VoxelMatch {
  struct Pair {
    int gt_index;
    int est_index;
    double angular_error_deg;
  };
  std::vector<Pair> matched;
  std::vector<int> unmatched_gt;   // missing (f-)
  std::vector<int> unmatched_est;  // extra (f+)
};

struct MatchResult {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<VoxelMatch> voxels;

  std::size_t index(int x, int y, int z) const {
    return std::size_t(x) + std::size_t(dims[0]) * (std::size_t(y) + std::size_t(dims[1]) * z);
  }
};

MatchResult match_fixels(const FixelSet& gt, const FixelSet& est, double threshold_deg = 45.0);

struct FixelMetrics {
  double mean_angular_error_deg = 0;
  double peak_error = 0;
  double fd_error = 0;
  long n_matched = 0;
  long n_extra = 0;
  long n_missing = 0;
};

// normalized: divide the peak/fd error sums by (matched + extra + missing).
FixelMetrics fixel_metrics(const MatchResult& match, const FixelSet& gt, const FixelSet& est,
                           const Mask& roi, bool normalized = true);

// Keeps only ROI voxels whose ground-truth fixel count equals `expected`.
Mask filter_roi_by_fixel_count(const Mask& roi, const FixelSet& gt, int expected);

// Fixel file (.fxf): same envelope as the native volume; payload holds
// voxel_index (u32 x3), direction (f32 x3), fd (f32), peak (f32) arrays.
FixelSet read_fixels(const std::string& path);
void write_fixels(const FixelSet& fx, const std::string& path);

// Largest-magnitude component made positive.
Vec3 canonical_direction(const Vec3& d);

double angular_error_deg(const Vec3& a, const Vec3& b);

} // namespace fodkit
