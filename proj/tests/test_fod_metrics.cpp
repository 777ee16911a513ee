#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fodkit/error.hpp"
#include "fodkit/fod_metrics.hpp"
#include "helpers.hpp"

#include <random>

using namespace fodkit;

TEST_CASE("psnr of identical volumes is flagged infinite") {
  auto gt = testutil::random_volume({4, 4, 4}, 6, 2);
  Mask mask({4, 4, 4}, true);
  auto r = psnr(gt, gt, mask);
  CHECK(r.infinite);
}

TEST_CASE("psnr matches a hand computation") {
  SHVolume gt({2, 1, 1}, 1), est({2, 1, 1}, 1);
  gt.at(0, 0, 0, 0) = 2.0f;
  gt.at(1, 0, 0, 0) = -4.0f;
  est.at(0, 0, 0, 0) = 2.5f;
  est.at(1, 0, 0, 0) = -4.0f;
  Mask mask({2, 1, 1}, true);
  // MAX = 4, MSE = 0.25/2 -> psnr = 10*log10(16/0.125)
  auto r = psnr(gt, est, mask);
  CHECK_FALSE(r.infinite);
  CHECK(r.db == doctest::Approx(10.0 * std::log10(16.0 / 0.125)).epsilon(1e-10));
}

TEST_CASE("psnr only sees masked voxels") {
  auto gt = testutil::random_volume({3, 3, 3}, 6, 4);
  auto est = gt;
  est.at(0, 0, 0, 0) += 10.0f;  // corrupt one voxel
  Mask mask({3, 3, 3}, true);
  mask.set(0, 0, 0, false);
  CHECK(psnr(gt, est, mask).infinite);
  CHECK_THROWS_AS(psnr(gt, est, Mask({3, 3, 3}, false)), Error);
}

TEST_CASE("angular correlation identities") {
  std::mt19937 rng(6);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd v(28);
    for (int i = 0; i < 28; ++i)
      v[i] = nd(rng);
    SHCoeffs u(6, v), neg(6, -v);
    auto same = angular_correlation(u, u);
    auto opp = angular_correlation(u, neg);
    REQUIRE(same.has_value());
    REQUIRE(opp.has_value());
    CHECK(*same == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*opp == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("angular correlation excludes l=0 unless asked") {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(6), b = Eigen::VectorXd::Zero(6);
  a[0] = 1.0;  // only l=0 content
  b[0] = 5.0;
  SHCoeffs ca(2, a), cb(2, b);
  CHECK_FALSE(angular_correlation(ca, cb).has_value());  // zero norm without l0
  auto with = angular_correlation(ca, cb, true);
  REQUIRE(with.has_value());
  CHECK(*with == doctest::Approx(1.0));

  // scale invariance on the higher-order part
  Eigen::VectorXd c = Eigen::VectorXd::Zero(6), d = Eigen::VectorXd::Zero(6);
  c[1] = 1.0;
  c[0] = 99.0;
  d[1] = 3.0;
  d[0] = -7.0;
  auto r = angular_correlation(SHCoeffs(2, c), SHCoeffs(2, d));
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("roi report flags empty masks but computes the rest") {
  auto gt = testutil::random_volume({3, 3, 3}, 6, 8);
  auto est = gt;
  for (auto& v : est.data)
    v += 0.01f;
  std::map<std::string, Mask> masks;
  masks["full"] = Mask({3, 3, 3}, true);
  masks["empty"] = Mask({3, 3, 3}, false);
  auto report = roi_fod_report(gt, est, masks);
  REQUIRE(report.count("full") == 1);
  REQUIRE(report.count("empty") == 1);
  CHECK(report["full"].ok);
  CHECK(report["full"].n_voxels == 27);
  CHECK_FALSE(report["empty"].ok);
  CHECK_FALSE(report["empty"].error.empty());
}

TEST_CASE("mismatched grids are rejected") {
  auto gt = testutil::random_volume({3, 3, 3}, 6, 1);
  auto est = testutil::random_volume({3, 3, 2}, 6, 1);
  Mask mask({3, 3, 3}, true);
  CHECK_THROWS_AS(psnr(gt, est, mask), Error);
}
