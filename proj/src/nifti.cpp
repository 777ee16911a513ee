#include "fodkit/volume.hpp"
#include "fodkit/error.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace fodkit {

namespace {

// Fields of the 348-byte NIfTI-1 header that the importer uses.
struct Nifti1Header {
  std::int32_t sizeof_hdr;     // offset 0
  std::int16_t dim[8];         // offset 40
  std::int16_t datatype;       // offset 70
  std::int16_t bitpix;         // offset 72
  float pixdim[8];             // offset 76
  float vox_offset;            // offset 108
  float scl_slope;             // offset 112
  float scl_inter;             // offset 116
  std::int16_t qform_code;     // offset 252
  std::int16_t sform_code;     // offset 254
  float quatern_b, quatern_c, quatern_d;     // offset 256
  float qoffset_x, qoffset_y, qoffset_z;     // offset 268
  float srow_x[4], srow_y[4], srow_z[4];     // offset 280
  char magic[4];               // offset 344
};

template <class T> T load_at(const std::vector<std::uint8_t>& buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

template <class T> T byteswap_scalar(T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
    std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

// Reads a whole file, transparently inflating gzip (magic 1f 8b).
std::vector<std::uint8_t> slurp_maybe_gz(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe)
    fail("file_not_found", "cannot open " + path);
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();

  std::vector<std::uint8_t> out;
  if (magic[0] == 0x1f && magic[1] == 0x8b) {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz)
      fail("io_error", "cannot gzopen " + path);
    std::uint8_t chunk[1 << 16];
    int got;
    while ((got = gzread(gz, chunk, sizeof(chunk))) > 0)
      out.insert(out.end(), chunk, chunk + got);
    bool bad = got < 0;
    gzclose(gz);
    if (bad)
      fail("io_error", "gzip decompression failed for " + path);
  } else {
    std::ifstream in(path, std::ios::binary);
    out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

Nifti1Header parse_header(const std::vector<std::uint8_t>& buf, const std::string& path,
                          bool& swapped) {
  if (buf.size() < 348)
    fail("truncated", path + ": file shorter than a NIfTI-1 header");
  Nifti1Header h{};
  h.sizeof_hdr = load_at<std::int32_t>(buf, 0);
  swapped = false;
  if (h.sizeof_hdr != 348) {
    if (byteswap_scalar(h.sizeof_hdr) != 348)
      fail("malformed_header", path + ": sizeof_hdr is not 348 in either byte order");
    swapped = true;
  }
  auto s16 = [&](std::size_t off) {
    auto v = load_at<std::int16_t>(buf, off);
    return swapped ? byteswap_scalar(v) : v;
  };
  auto f32 = [&](std::size_t off) {
    auto v = load_at<float>(buf, off);
    return swapped ? byteswap_scalar(v) : v;
  };
  for (int i = 0; i < 8; ++i) {
    h.dim[i] = s16(40 + 2 * std::size_t(i));
    h.pixdim[i] = f32(76 + 4 * std::size_t(i));
  }
  h.datatype = s16(70);
  h.bitpix = s16(72);
  h.vox_offset = f32(108);
  h.scl_slope = f32(112);
  h.scl_inter = f32(116);
  h.qform_code = s16(252);
  h.sform_code = s16(254);
  h.quatern_b = f32(256);
  h.quatern_c = f32(260);
  h.quatern_d = f32(264);
  h.qoffset_x = f32(268);
  h.qoffset_y = f32(272);
  h.qoffset_z = f32(276);
  for (int i = 0; i < 4; ++i) {
    h.srow_x[i] = f32(280 + 4 * std::size_t(i));
    h.srow_y[i] = f32(296 + 4 * std::size_t(i));
    h.srow_z[i] = f32(312 + 4 * std::size_t(i));
  }
  std::memcpy(h.magic, buf.data() + 344, 4);
  if (std::memcmp(h.magic, "n+1\0", 4) != 0)
    fail("malformed_header", path + ": magic is not 'n+1'");
  return h;
}

std::array<double, 16> qform_to_affine(const Nifti1Header& h) {
  double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
  double a2 = 1.0 - (b * b + c * c + d * d);
  double a = a2 > 0 ? std::sqrt(a2) : 0.0;
  double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
  double R[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
  double sx = h.pixdim[1], sy = h.pixdim[2], sz = h.pixdim[3] * qfac;
  std::array<double, 16> aff{};
  for (int i = 0; i < 3; ++i) {
    aff[4 * std::size_t(i) + 0] = R[i][0] * sx;
    aff[4 * std::size_t(i) + 1] = R[i][1] * sy;
    aff[4 * std::size_t(i) + 2] = R[i][2] * sz;
  }
  aff[3] = h.qoffset_x;
  aff[7] = h.qoffset_y;
  aff[11] = h.qoffset_z;
  aff[15] = 1.0;
  return aff;
}

} // namespace

SHVolume import_nifti(const std::string& path) {
  auto buf = slurp_maybe_gz(path);
  bool swapped = false;
  Nifti1Header h = parse_header(buf, path, swapped);

  if (h.datatype != 16)
    fail("unsupported_datatype", path + ": unsupported datatype " + std::to_string(h.datatype) +
                                     " (only float32 = 16)");
  if (h.dim[0] != 3 && h.dim[0] != 4)
    fail("unsupported_dims", path + ": dim[0] = " + std::to_string(h.dim[0]) +
                                 " (only 3D/4D supported)");

  SHVolume vol;
  vol.dims = {h.dim[1], h.dim[2], h.dim[3]};
  vol.ncoef = h.dim[0] == 4 ? h.dim[4] : 1;
  if (vol.ncoef <= 0)
    vol.ncoef = 1;
  vol.voxel_size = {std::abs(h.pixdim[1]), std::abs(h.pixdim[2]), std::abs(h.pixdim[3])};

  if (h.sform_code > 0) {
    std::array<double, 16> aff{};
    for (int i = 0; i < 4; ++i) {
      aff[std::size_t(i)] = h.srow_x[i];
      aff[4 + std::size_t(i)] = h.srow_y[i];
      aff[8 + std::size_t(i)] = h.srow_z[i];
    }
    aff[15] = 1.0;
    vol.affine = aff;
  } else if (h.qform_code > 0) {
    vol.affine = qform_to_affine(h);
  } else {
    vol.set_default_affine();
  }

  std::size_t n = vol.nvoxels() * std::size_t(vol.ncoef);
  std::size_t off = std::size_t(h.vox_offset);
  if (off < 348)
    off = 352;
  if (buf.size() < off + n * 4)
    fail("truncated", path + ": payload shorter than dims imply");

  vol.data.resize(n);
  std::memcpy(vol.data.data(), buf.data() + off, n * 4);
  if (swapped)
    for (auto& v : vol.data)
      v = byteswap_scalar(v);

  if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f))
    for (auto& v : vol.data)
      v = v * h.scl_slope + h.scl_inter;

  vol.validate(false);
  return vol;
}

} // namespace fodkit
