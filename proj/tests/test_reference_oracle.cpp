#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "sptomo/reference_oracle.hpp"
#include "sptomo/sptomo.hpp"
#include "support.hpp"

using namespace sptomo;
using Catch::Approx;

TEST_CASE("direct radon of zero") {
  const auto g = ScanGeometry::make(16, 5);
  const auto s = oracle::direct_radon(RealImage(16, 16), g);
  for (double v : s.values()) CHECK(v == 0.0);
}

TEST_CASE("direct radon of a disk gives chord lengths") {
  const std::size_t n = 64;
  const auto g = ScanGeometry::make(n, 7);
  const double r = n / 2.0;
  const auto s = oracle::direct_radon(disk_phantom(n, n, r), g);
  for (std::size_t t = 0; t < g.n_theta; ++t)
    for (std::size_t j = 0; j < n; ++j) {
      const double p = j - g.center;
      if (std::abs(p) > 0.8 * r) continue;
      // the pixelated disk edge is off by up to a pixel at each end of a chord
      CHECK(s(t, j) == Approx(2.0 * std::sqrt(r * r - p * p)).margin(2.0));
    }
}

TEST_CASE("direct radon is linear and symmetric under a half turn") {
  const std::size_t n = 32;
  ScanGeometry g = ScanGeometry::make(n, 2);
  g.angles = {0.4, 0.4 + std::numbers::pi};
  const auto ph = phantom_shepp_logan(n)[0];
  const auto s = oracle::direct_radon(ph, g);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double d = s(0, j) - s(1, n - j);
    num += d * d;
    den += s(0, j) * s(0, j);
  }
  CHECK(std::sqrt(num / den) <= 1e-3);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  RealImage a(n, n), b(n, n), mix(n, n);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = nd(rng);
    b[i] = nd(rng);
    mix[i] = 2.0 * a[i] - 0.5 * b[i];
  }
  const auto sa = oracle::direct_radon(a, g), sb = oracle::direct_radon(b, g);
  const auto sm = oracle::direct_radon(mix, g);
  std::vector<double> lin(sa.size());
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 2.0 * sa[i] - 0.5 * sb[i];
  CHECK(testing::rel_err(sm.values(), lin) < 1e-12);
}

TEST_CASE("oracle size limits") {
  CHECK_THROWS_AS(oracle::direct_radon(RealImage(130, 130), ScanGeometry::make(130, 2)),
                  GridTooLarge);
  CHECK_THROWS_AS(oracle::DenseOperator(ScanGeometry::make(18, 2)), GridTooLarge);
  CHECK_THROWS_AS(oracle::dense_lsq_solve(RealImage(2, 18), ScanGeometry::make(18, 2)),
                  GridTooLarge);
}

TEST_CASE("dense operator") {
  const auto g = ScanGeometry::make(8, 6);
  const oracle::DenseOperator a(g);
  std::mt19937_64 rng(7);
  const auto u = testing::random_complex(a.domain_size(), rng);
  const auto s = testing::random_complex(a.range_size(), rng);
  CVec au(s.size()), ats(u.size());
  a.apply(u, au);
  a.apply_adjoint(s, ats);
  CHECK(std::abs(testing::inner(s, au) - testing::inner(ats, u)) <
        1e-12 * testing::l2(u) * testing::l2(s));

  // the central ray at theta = 0 crosses the whole grid
  CHECK(a.matrix.row(g.n_p / 2).sum() == Approx(8.0).epsilon(0.05));

  const auto ph = phantom_shepp_logan(8)[0];
  const auto direct = oracle::direct_radon(ph, g);
  CVec viaa(g.sinogram_size());
  a.apply(testing::as_complex(ph.values()), viaa);
  for (std::size_t i = 0; i < direct.size(); ++i)
    CHECK(viaa[i].real() == Approx(direct[i]).margin(1e-12));
}

TEST_CASE("dense least squares") {
  const auto g = ScanGeometry::make(8, 32);
  const oracle::DenseOperator a(g);
  const auto ph = phantom_shepp_logan(8)[0];
  CVec s(g.sinogram_size());
  a.apply(testing::as_complex(ph.values()), s);
  RealImage sr(g.n_theta, g.n_p);
  for (std::size_t i = 0; i < s.size(); ++i) sr[i] = s[i].real();
  const auto x = oracle::dense_lsq_solve(sr, g);
  CHECK(testing::rel_err(x.values(), ph.values()) <= 1e-8);

  const auto zero = oracle::dense_lsq_solve(RealImage(g.n_theta, g.n_p), g);
  for (double v : zero.values()) CHECK(v == 0.0);
}

TEST_CASE("gridding radon agrees with direct ray sums") {
  const auto g = ScanGeometry::make(64, 90);
  const auto ops = TomoOperators::build(g);
  const auto ph = phantom_shepp_logan(64)[0];
  const auto fast = real_part(ops.radon(to_complex(ph)));
  const auto slow = oracle::direct_radon(ph, g);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < g.n_theta; ++t)
    for (std::size_t j = 0; j < g.n_p; ++j) {
      if (std::abs(j - g.center) > 0.8 * g.n_p / 2.0) continue;
      const double d = fast(t, j) - slow(t, j);
      num += d * d;
      den += slow(t, j) * slow(t, j);
    }
  CHECK(std::sqrt(num / den) <= 0.03);
}
