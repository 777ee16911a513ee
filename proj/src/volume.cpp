#include "fodkit/volume.hpp"
#include "fodkit/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

using nlohmann::json;

namespace fodkit {

int lmax_for_ncoef(int ncoef) {
  for (int l = 0; l <= 8; l += 2)
    if (num_sh_coeffs(l) == ncoef)
      return l;
  return -1;
}

SHVolume::SHVolume(std::array<int, 3> d, int nc, std::array<double, 3> vs)
    : dims(d), ncoef(nc), voxel_size(vs) {
  data.assign(nvoxels() * std::size_t(ncoef), 0.0f);
  set_default_affine();
}

void SHVolume::set_default_affine() {
  affine.fill(0.0);
  affine[0] = voxel_size[0];
  affine[5] = voxel_size[1];
  affine[10] = voxel_size[2];
  affine[15] = 1.0;
}

void SHVolume::validate(bool require_known_ncoef) const {
  if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
    fail("invalid_dims", "volume dimensions must be positive");
  if (ncoef <= 0)
    fail("invalid_ncoef", "ncoef must be positive");
  if (require_known_ncoef && lmax_for_ncoef(ncoef) < 0)
    fail("invalid_ncoef", "ncoef " + std::to_string(ncoef) +
                              " is not (l+1)(l+2)/2 for even l <= 8");
  if (data.size() != nvoxels() * std::size_t(ncoef))
    fail("payload_length_mismatch",
         "data length " + std::to_string(data.size()) + " != X*Y*Z*ncoef = " +
             std::to_string(nvoxels() * std::size_t(ncoef)));
  for (float v : data)
    if (!std::isfinite(v))
      fail("non_finite", "volume contains NaN or Inf");
}

std::size_t Mask::count() const {
  return std::accumulate(data.begin(), data.end(), std::size_t(0),
                         [](std::size_t a, std::uint8_t b) { return a + (b != 0); });
}

namespace {

json read_envelope_header(std::ifstream& in, const std::string& path) {
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
  return header;
}

void write_envelope_header(std::ofstream& out, const json& header) {
  std::string htext = header.dump();
  std::uint32_t hlen = std::uint32_t(htext.size());
  std::uint8_t lenbuf[4] = {std::uint8_t(hlen & 0xff), std::uint8_t((hlen >> 8) & 0xff),
                            std::uint8_t((hlen >> 16) & 0xff), std::uint8_t((hlen >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(lenbuf), 4);
  out.write(htext.data(), std::streamsize(htext.size()));
}

} // namespace

SHVolume read_native_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail("file_not_found", "cannot open " + path);
  json header = read_envelope_header(in, path);

  SHVolume vol;
  try {
    auto dims = header.at("dims").get<std::vector<int>>();
    if (dims.size() != 4)
      fail("malformed_header", path + ": dims must have 4 entries");
    vol.dims = {dims[0], dims[1], dims[2]};
    vol.ncoef = dims[3];
    auto vs = header.at("voxel_size").get<std::vector<double>>();
    if (vs.size() != 3)
      fail("malformed_header", path + ": voxel_size must have 3 entries");
    vol.voxel_size = {vs[0], vs[1], vs[2]};
    std::string dtype = header.at("dtype").get<std::string>();
    if (dtype != "f32le")
      fail("unsupported_dtype", path + ": dtype '" + dtype + "' not supported (expected f32le)");
    if (header.contains("affine")) {
      auto aff = header.at("affine").get<std::vector<double>>();
      if (aff.size() != 16)
        fail("malformed_header", path + ": affine must have 16 entries");
      std::copy(aff.begin(), aff.end(), vol.affine.begin());
    } else {
      vol.set_default_affine();
    }
  } catch (const json::exception& e) {
    fail("malformed_header", path + ": " + e.what());
  }

  std::size_t n = vol.nvoxels() * std::size_t(vol.ncoef);
  vol.data.resize(n);
  in.read(reinterpret_cast<char*>(vol.data.data()), std::streamsize(n * sizeof(float)));
  if (std::size_t(in.gcount()) != n * sizeof(float))
    fail("payload_length_mismatch", path + ": payload shorter than dims imply");
  char extra;
  if (in.read(&extra, 1))
    fail("payload_length_mismatch", path + ": payload longer than dims imply");

  vol.validate(false);
  return vol;
}

void write_native_volume(const SHVolume& vol, const std::string& path) {
  vol.validate(false);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    fail("io_error", "cannot open " + path + " for writing");
  json header;
  header["dims"] = {vol.dims[0], vol.dims[1], vol.dims[2], vol.ncoef};
  header["voxel_size"] = {vol.voxel_size[0], vol.voxel_size[1], vol.voxel_size[2]};
  header["affine"] = std::vector<double>(vol.affine.begin(), vol.affine.end());
  header["dtype"] = "f32le";
  write_envelope_header(out, header);
  out.write(reinterpret_cast<const char*>(vol.data.data()),
            std::streamsize(vol.data.size() * sizeof(float)));
  if (!out)
    fail("io_error", "write failed for " + path);
}

Mask mask_from_volume(const SHVolume& vol) {
  if (vol.ncoef != 1)
    fail("invalid_mask", "mask volume must have ncoef 1, got " + std::to_string(vol.ncoef));
  Mask m(vol.dims);
  for (std::size_t i = 0; i < vol.data.size(); ++i)
    m.data[i] = vol.data[i] > 0.5f ? 1 : 0;
  return m;
}

SHVolume volume_from_mask(const Mask& mask) {
  SHVolume vol(mask.dims, 1);
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    vol.data[i] = mask.data[i] ? 1.0f : 0.0f;
  return vol;
}

} // namespace fodkit
