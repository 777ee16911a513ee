#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fodkit/enhance.hpp"
#include "fodkit/error.hpp"
#include "fodkit/fod_metrics.hpp"
#include "helpers.hpp"

#include <random>

using namespace fodkit;
using testutil::TempFile;

TEST_CASE("patch grid arithmetic") {
  auto g64 = plan_patches({64, 64, 64});
  CHECK(g64.offsets.size() == 1);
  CHECK(g64.axis_offsets[0] == std::vector<int>{0});

  auto g96 = plan_patches({96, 96, 96});
  CHECK(g96.axis_offsets[0] == std::vector<int>{0, 32});
  CHECK(g96.offsets.size() == 8);

  auto g100 = plan_patches({100, 100, 100});
  CHECK(g100.axis_offsets[0] == std::vector<int>{0, 32, 36});  // last clamped to 100-64
  CHECK(g100.offsets.size() == 27);

  auto g65 = plan_patches({65, 64, 64});
  CHECK(g65.axis_offsets[0] == std::vector<int>{0, 1});
  CHECK(g65.offsets.size() == 2);
}

TEST_CASE("rescale undoes standardize") {
  auto vol = testutil::random_volume({6, 5, 4}, 6, 3);
  Mask mask({6, 5, 4}, true);
  for (int i = 0; i < 10; ++i)
    mask.data[std::size_t(i * 7) % mask.data.size()] = 0;
  auto stats = compute_stats(vol, mask);
  auto back = rescale(standardize(vol, stats), stats);
  for (std::size_t i = 0; i < vol.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(vol.data[i]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("standardized masked voxels have zero mean and unit variance") {
  auto vol = testutil::random_volume({8, 8, 8}, 6, 5);
  Mask mask({8, 8, 8}, true);
  auto stats = compute_stats(vol, mask);
  auto std_vol = standardize(vol, stats);
  for (int c = 0; c < 6; ++c) {
    double sum = 0, sum2 = 0;
    for (std::size_t v = 0; v < vol.nvoxels(); ++v) {
      double x = std_vol.data[v + vol.nvoxels() * std::size_t(c)];
      sum += x;
      sum2 += x * x;
    }
    double n = double(vol.nvoxels());
    CHECK(sum / n == doctest::Approx(0.0).scale(1.0).epsilon(1e-5));
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("identity enhancement reproduces the input on overlapping patches") {
  auto vol = testutil::random_volume({80, 70, 66}, 6, 9);
  Mask mask({80, 70, 66}, true);
  // carve out some voxels to exercise the outside-mask path
  for (int z = 0; z < 66; z += 7)
    mask.set(3, 4, z, false);
  auto stats = compute_stats(vol, mask);
  auto out = enhance(vol, mask, stats, identity_enhancer());
  REQUIRE(out.data.size() == vol.data.size());
  for (int c = 0; c < 6; ++c)
    for (int z = 0; z < 66; ++z)
      for (int y = 0; y < 70; ++y)
        for (int x = 0; x < 80; ++x) {
          float got = out.at(x, y, z, c), expect = vol.at(x, y, z, c);
          if (!mask.at(x, y, z))
            CHECK(got == expect);  // bit-exact outside the mask
          else
            CHECK(got == doctest::Approx(expect).epsilon(1e-5).scale(1.0));
        }
}

TEST_CASE("small volumes are zero-padded to the patch size") {
  auto vol = testutil::random_volume({10, 12, 8}, 6, 15);
  Mask mask({10, 12, 8}, true);
  auto stats = compute_stats(vol, mask);
  auto out = enhance(vol, mask, stats, identity_enhancer());
  for (std::size_t i = 0; i < vol.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(vol.data[i]).epsilon(1e-5).scale(1.0));
}

TEST_CASE("linear enhancer applies W x + b per voxel") {
  int nc = 6;
  LinearEnhancer e;
  e.W = Eigen::MatrixXd::Identity(nc, nc) * 2.0;
  e.b = Eigen::VectorXd::Constant(nc, 1.0);
  auto patch = testutil::random_volume({4, 4, 4}, nc, 2);
  auto out = e(patch);
  for (int c = 0; c < nc; ++c)
    for (std::size_t v = 0; v < patch.nvoxels(); ++v) {
      std::size_t i = v + patch.nvoxels() * std::size_t(c);
      CHECK(out.data[i] == doctest::Approx(2.0 * patch.data[i] + 1.0).epsilon(1e-6));
    }
}

TEST_CASE("linear fit recovers a synthetic affine map") {
  std::mt19937 rng(41);
  int nc = 6;
  std::array<int, 3> dims{12, 11, 10};
  auto lq = testutil::random_volume(dims, nc, 8);
  Mask mask(dims, true);
  auto stats = compute_stats(lq, mask);

  // well-conditioned ground-truth map in standardized space
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(nc, nc);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j)
      A(i, j) += nd(rng);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nc);
  for (int i = 0; i < nc; ++i)
    c[i] = nd(rng);

  auto x_std = standardize(lq, stats);
  SHVolume gt = lq;
  for (std::size_t v = 0; v < lq.nvoxels(); ++v) {
    Eigen::VectorXd x(nc);
    for (int k = 0; k < nc; ++k)
      x[k] = x_std.data[v + lq.nvoxels() * std::size_t(k)];
    Eigen::VectorXd y = A * x + c;
    for (int k = 0; k < nc; ++k)
      gt.data[v + lq.nvoxels() * std::size_t(k)] = float(y[k]);
  }
  // gt currently holds standardized-space targets; move to raw space so the
  // fit sees realistic volumes
  gt = rescale(gt, stats);

  auto fit = fit_linear_enhancer(lq, gt, mask);
  CHECK((fit.W - A).norm() / A.norm() < 1e-4);
  CHECK((fit.b - c).norm() < 1e-4);

  // enhancement with the fitted model must beat the unenhanced input
  auto enhanced = enhance(lq, mask, stats, fit);
  auto before = psnr(gt, lq, mask);
  auto after = psnr(gt, enhanced, mask);
  REQUIRE_FALSE(before.infinite);
  if (!after.infinite)
    CHECK(after.db > before.db);
}

TEST_CASE("model json round trip") {
  int nc = 6;
  LinearEnhancer e;
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  e.W = Eigen::MatrixXd::NullaryExpr(nc, nc, [&] { return nd(rng); });
  e.b = Eigen::VectorXd::NullaryExpr(nc, [&] { return nd(rng); });
  CoeffStats stats;
  for (int i = 0; i < nc; ++i) {
    stats.mean.push_back(nd(rng));
    stats.std.push_back(std::abs(nd(rng)) + 0.5);
  }
  TempFile f("model.json");
  write_linear_enhancer(e, stats, f.path);
  auto back = read_linear_enhancer(f.path);
  auto back_stats = read_linear_enhancer_stats(f.path);
  CHECK((back.W - e.W).norm() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK((back.b - e.b).norm() == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  for (int i = 0; i < nc; ++i) {
    CHECK(back_stats.mean[std::size_t(i)] == doctest::Approx(stats.mean[std::size_t(i)]));
    CHECK(back_stats.std[std::size_t(i)] == doctest::Approx(stats.std[std::size_t(i)]));
  }
}

TEST_CASE("external process enhancer: copy is identity") {
  auto vol = testutil::random_volume({16, 16, 16}, 6, 12);
  Mask mask({16, 16, 16}, true);
  auto stats = compute_stats(vol, mask);
  auto enhancer = external_process_enhancer("cp", std::filesystem::temp_directory_path().string());
  auto out = enhance(vol, mask, stats, enhancer);
  for (std::size_t i = 0; i < vol.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(vol.data[i]).epsilon(1e-5).scale(1.0));
}

TEST_CASE("enhancer returning the wrong shape fails") {
  auto vol = testutil::random_volume({8, 8, 8}, 6, 1);
  Mask mask({8, 8, 8}, true);
  auto stats = compute_stats(vol, mask);
  Enhancer bad = [](const SHVolume& patch) {
    SHVolume out({2, 2, 2}, patch.ncoef);
    return out;
  };
  CHECK_THROWS_AS(enhance(vol, mask, stats, bad), Error);
}
