#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fodkit {

// Number of even-order real SH coefficients for a given lmax.
inline constexpr int num_sh_coeffs(int lmax) { return (lmax + 1) * (lmax + 2) / 2; }

// lmax for a coefficient count, or -1 if the count is not a valid even-order size.
int lmax_for_ncoef(int ncoef);

// 4D grid of per-voxel SH coefficients (or any per-voxel scalar vector).
// Linear index = x + X*(y + Y*(z + Z*c)): x fastest, coefficient slowest,
// same memory order as NIfTI.
struct SHVolume {
  std::array<int, 3> dims{0, 0, 0};
  int ncoef = 0;
  std::array<double, 3> voxel_size{1.0, 1.0, 1.0};
  std::array<double, 16> affine{};  // row-major voxel->world
  std::vector<float> data;

  SHVolume() = default;
  SHVolume(std::array<int, 3> d, int nc, std::array<double, 3> vs = {1, 1, 1});

  std::size_t nvoxels() const {
    return std::size_t(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int x, int y, int z, int c) const {
    return std::size_t(x) +
           std::size_t(dims[0]) * (std::size_t(y) + std::size_t(dims[1]) * (std::size_t(z) + std::size_t(dims[2]) * c));
  }
  float& at(int x, int y, int z, int c) { return data[index(x, y, z, c)]; }
  float at(int x, int y, int z, int c) const { return data[index(x, y, z, c)]; }

  void set_default_affine();

  // Throws on invalid ncoef, size mismatch or non-finite values.
  void validate(bool require_known_ncoef = true) const;
};

// Per-voxel boolean mask.
struct Mask {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(std::array<int, 3> d, bool value = false)
      : dims(d), data(std::size_t(d[0]) * d[1] * d[2], value ? 1 : 0) {}

  std::size_t index(int x, int y, int z) const {
    return std::size_t(x) + std::size_t(dims[0]) * (std::size_t(y) + std::size_t(dims[1]) * z);
  }
  bool at(int x, int y, int z) const { return data[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool v) { data[index(x, y, z)] = v ? 1 : 0; }
  std::size_t count() const;
};

// Native container: [u32 LE header length][UTF-8 JSON header][raw f32le payload].
SHVolume read_native_volume(const std::string& path);
void write_native_volume(const SHVolume& vol, const std::string& path);

// Masks travel as ncoef=1 volumes; > 0.5 means inside.
Mask mask_from_volume(const SHVolume& vol);
SHVolume volume_from_mask(const Mask& mask);

// Single-file NIfTI-1 importer (float32, dim[0] in {3,4}, optional gzip).
SHVolume import_nifti(const std::string& path);

} // namespace fodkit
