#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fodkit/connmatrix.hpp"
#include "fodkit/error.hpp"
#include "fodkit/gradients.hpp"
#include "fodkit/volume.hpp"
#include "helpers.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <random>

using namespace fodkit;
using testutil::TempFile;

TEST_CASE("sh coefficient counts") {
  CHECK(num_sh_coeffs(0) == 1);
  CHECK(num_sh_coeffs(2) == 6);
  CHECK(num_sh_coeffs(4) == 15);
  CHECK(num_sh_coeffs(6) == 28);
  CHECK(num_sh_coeffs(8) == 45);
  CHECK(lmax_for_ncoef(45) == 8);
  CHECK(lmax_for_ncoef(1) == 0);
  CHECK(lmax_for_ncoef(7) == -1);
}

TEST_CASE("native volume round trip is bit exact") {
  std::mt19937 seed_rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    std::array<int, 3> dims{int(seed_rng() % 6 + 1), int(seed_rng() % 6 + 1),
                            int(seed_rng() % 6 + 1)};
    int ncoef = std::array<int, 4>{1, 6, 15, 28}[rep % 4];
    auto vol = testutil::random_volume(dims, ncoef, seed_rng());
    vol.voxel_size = {1.25, 1.25, 1.25};
    vol.set_default_affine();
    TempFile f("vol.fvf");
    write_native_volume(vol, f.path);
    auto back = read_native_volume(f.path);
    CHECK(back.dims == vol.dims);
    CHECK(back.ncoef == vol.ncoef);
    CHECK(back.voxel_size == vol.voxel_size);
    CHECK(back.affine == vol.affine);
    REQUIRE(back.data.size() == vol.data.size());
    CHECK(std::memcmp(back.data.data(), vol.data.data(), vol.data.size() * 4) == 0);
  }
}

TEST_CASE("volume validation rejects bad shapes and values") {
  SHVolume v({2, 2, 2}, 6);
  CHECK_NOTHROW(v.validate());
  v.data[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(v.validate(), Error);
  SHVolume w({2, 2, 2}, 7);
  CHECK_THROWS_AS(w.validate(), Error);
  CHECK_NOTHROW(w.validate(false));
  SHVolume t({2, 2, 2}, 6);
  t.data.pop_back();
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("mask volume conversion") {
  Mask m({3, 2, 2});
  m.set(0, 0, 0, true);
  m.set(2, 1, 1, true);
  auto vol = volume_from_mask(m);
  CHECK(vol.ncoef == 1);
  auto back = mask_from_volume(vol);
  CHECK(back.dims == m.dims);
  CHECK(back.data == m.data);
  CHECK(back.count() == 2);
  SHVolume multi({2, 2, 2}, 6);
  CHECK_THROWS_AS(mask_from_volume(multi), Error);
}

TEST_CASE("truncated native file fails with a clear error") {
  auto vol = testutil::random_volume({2, 2, 2}, 6, 1);
  TempFile f("trunc.fvf");
  write_native_volume(vol, f.path);
  auto size = std::filesystem::file_size(f.path);
  std::filesystem::resize_file(f.path, size - 8);
  CHECK_THROWS_AS(read_native_volume(f.path), Error);
}

namespace {

// Minimal single-file NIfTI-1 writer for fixtures (little-endian host assumed).
void write_nifti_fixture(const std::string& path, std::array<int, 3> dims, int nvol,
                         const std::vector<float>& data, float slope, float inter,
                         bool gzipped) {
  std::vector<char> hdr(352, 0);
  auto put32 = [&](std::size_t off, std::int32_t v) { std::memcpy(hdr.data() + off, &v, 4); };
  auto put16 = [&](std::size_t off, std::int16_t v) { std::memcpy(hdr.data() + off, &v, 2); };
  auto putf = [&](std::size_t off, float v) { std::memcpy(hdr.data() + off, &v, 4); };
  put32(0, 348);                       // sizeof_hdr
  put16(40, std::int16_t(nvol > 1 ? 4 : 3));  // dim[0]
  put16(42, std::int16_t(dims[0]));
  put16(44, std::int16_t(dims[1]));
  put16(46, std::int16_t(dims[2]));
  put16(48, std::int16_t(nvol));
  put16(50, 1);
  put16(52, 1);
  put16(54, 1);
  put16(70, 16);                       // datatype float32
  put16(72, 32);                       // bitpix
  putf(80, 2.0f);                      // pixdim[1..3]
  putf(84, 2.0f);
  putf(88, 2.0f);
  putf(108, 352.0f);                   // vox_offset
  putf(112, slope);
  putf(116, inter);
  put16(254, 1);                       // sform_code
  putf(280, 2.0f);  putf(292, -10.0f);  // srow_x: [2 0 0 -10]
  putf(300, 2.0f);  putf(308, -20.0f);  // srow_y: [0 2 0 -20]
  putf(320, 2.0f);  putf(324, -30.0f);  // srow_z: [0 0 2 -30]
  std::memcpy(hdr.data() + 344, "n+1\0", 4);
  if (gzipped) {
    gzFile gz = gzopen(path.c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, hdr.data(), unsigned(hdr.size()));
    gzwrite(gz, data.data(), unsigned(data.size() * 4));
    gzclose(gz);
  } else {
    std::ofstream f(path, std::ios::binary);
    f.write(hdr.data(), std::streamsize(hdr.size()));
    f.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size() * 4));
  }
}

} // namespace

TEST_CASE("nifti import reads plain and gzipped float32 with scaling") {
  std::array<int, 3> dims{3, 2, 2};
  std::vector<float> payload(std::size_t(3 * 2 * 2 * 6));
  std::mt19937 rng(11);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  for (auto& v : payload)
    v = u(rng);
  for (bool gz : {false, true}) {
    TempFile f(gz ? "fix.nii.gz" : "fix.nii");
    write_nifti_fixture(f.path, dims, 6, payload, 2.0f, 0.5f, gz);
    auto vol = import_nifti(f.path);
    CHECK(vol.dims == dims);
    CHECK(vol.ncoef == 6);
    CHECK(vol.voxel_size[0] == doctest::Approx(2.0));
    for (std::size_t i = 0; i < payload.size(); ++i)
      CHECK(vol.data[i] == doctest::Approx(payload[i] * 2.0f + 0.5f));
    CHECK(vol.affine[0] == doctest::Approx(2.0));
    CHECK(vol.affine[3] == doctest::Approx(-10.0));
  }
}

TEST_CASE("nifti import rejects unsupported datatype") {
  TempFile f("bad.nii");
  std::array<int, 3> dims{2, 2, 2};
  std::vector<float> payload(8, 0.f);
  write_nifti_fixture(f.path, dims, 1, payload, 1.f, 0.f, false);
  // overwrite datatype to int16
  std::fstream fs(f.path, std::ios::in | std::ios::out | std::ios::binary);
  std::int16_t dt = 4;
  fs.seekp(70);
  fs.write(reinterpret_cast<const char*>(&dt), 2);
  fs.close();
  try {
    import_nifti(f.path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.code()) == "unsupported_datatype");
  }
}

TEST_CASE("fsl gradient round trip and shell clustering") {
  GradientTable t;
  t.rows = {{{0, 0, 0}, 0},
            {{1, 0, 0}, 1000},
            {{0, 1, 0}, 995},
            {{0, 0, 1}, 3010},
            {{0, 0, 0}, 5}};
  t.cluster_shells();
  REQUIRE(t.shells.size() == 3);
  CHECK(t.shells[0].bvalue == 0.0);  // b0 shell reports a canonical zero
  CHECK(t.shells[0].rows == std::vector<int>{0, 4});
  CHECK(t.shells[1].rows == std::vector<int>{1, 2});
  CHECK(t.shells[2].rows == std::vector<int>{3});
  CHECK(t.find_shell(1000) == 1);
  CHECK(t.find_shell(7000) == -1);

  TempFile bvecs("bvecs"), bvals("bvals");
  write_gradients_fsl(t, bvecs.path, bvals.path);
  auto back = read_gradients_fsl(bvecs.path, bvals.path);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(back.rows[i].bval == doctest::Approx(t.rows[i].bval));
    for (int c = 0; c < 3; ++c)
      CHECK(back.rows[i].dir[c] == doctest::Approx(t.rows[i].dir[c]));
  }
  CHECK(back.shells.size() == 3);

  TempFile grad("grad.txt");
  write_gradients_mrtrix(t, grad.path);
  auto back2 = read_gradients_mrtrix(grad.path);
  REQUIRE(back2.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    CHECK(back2.rows[i].bval == doctest::Approx(t.rows[i].bval));
}

TEST_CASE("gradient readers reject malformed input") {
  TempFile bvecs("bvecs"), bvals("bvals");
  std::ofstream(bvecs.path) << "1 0\n0 1\n0 0\n";
  std::ofstream(bvals.path) << "1000 1000 1000\n";
  CHECK_THROWS_AS(read_gradients_fsl(bvecs.path, bvals.path), Error);
  TempFile grad("grad.txt");
  std::ofstream(grad.path) << "1 0 0 abc\n";
  CHECK_THROWS_AS(read_gradients_mrtrix(grad.path), Error);
}

TEST_CASE("connectivity matrix round trip with labels") {
  ConnMatrix m(3);
  m.labels = {"A", "B", "C"};
  m.at(0, 1) = m.at(1, 0) = 1.5;
  m.at(1, 2) = m.at(2, 1) = 0.25;
  TempFile f("conn.csv");
  write_connmatrix(m, f.path);
  auto back = read_connmatrix(f.path);
  CHECK(back.n_nodes == 3);
  CHECK(back.labels == m.labels);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(back.at(i, j) == doctest::Approx(m.at(i, j)));
}

TEST_CASE("connectivity matrix input checks") {
  TempFile f("bad.csv");
  std::ofstream(f.path) << "0,1\n1,0\n2,0\n";
  CHECK_THROWS_AS(read_connmatrix(f.path), Error);
  std::ofstream(f.path, std::ios::trunc) << "0,-1\n-1,0\n";
  CHECK_THROWS_AS(read_connmatrix(f.path), Error);
  // mild asymmetry is symmetrized by averaging
  std::ofstream(f.path, std::ios::trunc) << "0,1.0\n3.0,0\n";
  auto m = read_connmatrix(f.path);
  CHECK(m.at(0, 1) == doctest::Approx(2.0));
  CHECK(m.at(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("dk84 label table") {
  const auto& labels = dk84_labels();
  REQUIRE(labels.size() == 84);
  CHECK(labels[0] == "L.BSTS");
  CHECK(labels[35] == "L.TH");
  CHECK(labels[41] == "L.AC");
  CHECK(labels[42] == "R.TH");
  CHECK(labels[49] == "R.BSTS");
  CHECK(labels[83] == "R.CER");
  ConnMatrix m(84);
  CHECK(m.labels.size() == 84);  // auto-populated for the DK atlas size
}
