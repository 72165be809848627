#include <catch_amalgamated.hpp>

#include <limits>
#include <random>

#include "sptomo/reference_oracle.hpp"
#include "sptomo/sptomo.hpp"
#include "support.hpp"

using namespace sptomo;
using Catch::Approx;

namespace {

struct Problem {
  TomoOperators ops;
  RealImage truth;
  CVec clean, noisy;
};

const Problem& problem64() {
  static const Problem p = [] {
    Problem pr{TomoOperators::build(ScanGeometry::make(64, 90)),
               phantom_shepp_logan(64)[0], {}, {}};
    pr.clean.resize(pr.ops.range_size());
    pr.ops.apply(testing::as_complex(pr.truth.values()), pr.clean);
    double peak = 0.0;
    for (auto& v : pr.clean) {
      v = v.real();
      peak = std::max(peak, v.real());
    }
    std::mt19937 rng(0);
    std::normal_distribution<double> nd;
    pr.noisy = pr.clean;
    for (auto& v : pr.noisy) v += 0.02 * peak * nd(rng);
    return pr;
  }();
  return p;
}

SolverConfig config(Algorithm a, int iters) {
  SolverConfig c;
  c.algorithm = a;
  c.max_iter = iters;
  return c;
}

double precond_residual(const TomoOperators& ops, const CVec& b, const CVec& u,
                        FilterKind kind = FilterKind::Hamming) {
  CVec au(ops.range_size());
  ops.apply(u, au);
  for (std::size_t i = 0; i < au.size(); ++i) au[i] = b[i] - au[i];
  return testing::l2(precondition_apply(Preconditioner::make(kind, ops.geom), au));
}

double snr_of(const CVec& u, const RealImage& truth) {
  std::vector<double> re(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) re[i] = u[i].real();
  return snr(re, truth.values());
}

}  // namespace

TEST_CASE("config validation and names") {
  SolverConfig c;
  c.max_iter = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.max_iter = 3;
  c.mu = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.mu = 1.0;
  c.tol = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK(algorithm_from_string("tv") == Algorithm::TV);
  CHECK_THROWS_AS(algorithm_from_string("art"), InvalidArgument);
  c = config(Algorithm::SIRT, 3);
  c.filter = FilterKind::Density;
  CHECK_THROWS_AS(make_preconditioner(c, ScanGeometry::make(8, 2)), InvalidArgument);
}

TEST_CASE("shrink") {
  CHECK(shrink(0.3, 0.4, 0.5) == std::pair{0.0, 0.0});
  CHECK(shrink(0.0, 0.0, 0.1) == std::pair{0.0, 0.0});
  const auto [x, y] = shrink(3.0, 4.0, 1.0);
  CHECK(x == Approx(2.4));
  CHECK(y == Approx(3.2));
}

TEST_CASE("gradient operator adjoint") {
  GradientOp g{7, 9};
  std::mt19937_64 rng(3);
  const auto u = testing::random_complex(g.domain_size(), rng);
  const auto v = testing::random_complex(g.range_size(), rng);
  CVec gu(g.range_size()), gtv(g.domain_size());
  g.apply(u, gu);
  g.apply_adjoint(v, gtv);
  CHECK(std::abs(testing::inner(v, gu) - testing::inner(gtv, u)) < 1e-10);
}

TEST_CASE("FBP") {
  const auto& p = problem64();
  const auto zero = solve(CVec(p.ops.range_size()), p.ops, config(Algorithm::FBP, 1));
  for (const auto& v : zero.u) CHECK(v == cplx{});
  CHECK(zero.report.residual_history.size() == 1);
  CHECK(zero.report.iterations_run == 1);

  const auto ops = TomoOperators::build(ScanGeometry::make(128, 180));
  const auto ph = phantom_shepp_logan(128)[0];
  CVec s(ops.range_size());
  ops.apply(testing::as_complex(ph.values()), s);
  const auto rec = solve(s, ops, config(Algorithm::FBP, 1));
  CHECK(snr_of(rec.u, ph) >= 3.0);
}

TEST_CASE("SIRT") {
  const auto& p = problem64();
  SECTION("beats FBP on noisy data") {
    const auto fbp = solve(p.noisy, p.ops, config(Algorithm::FBP, 1));
    const auto sirt = solve(p.noisy, p.ops, config(Algorithm::SIRT, 10));
    CHECK(sirt.report.residual_history.size() == 10);
    CHECK(precond_residual(p.ops, p.noisy, sirt.u) < precond_residual(p.ops, p.noisy, fbp.u));
    CHECK(snr_of(sirt.u, p.truth) > snr_of(fbp.u, p.truth));
  }
  SECTION("BB steps are no worse than fixed steps") {
    auto c = config(Algorithm::SIRT, 10);
    const auto bb = solve(p.clean, p.ops, c);
    c.bb_enabled = false;
    const auto fixed = solve(p.clean, p.ops, c);
    CHECK(bb.report.residual_history.back() <= fixed.report.residual_history.back());
  }
  SECTION("consistent single-angle problem converges") {
    const auto ops = TomoOperators::build(ScanGeometry::make(16, 1));
    const auto ph = phantom_shepp_logan(16)[0];
    CVec s(ops.range_size());
    ops.apply(testing::as_complex(ph.values()), s);
    auto c = config(Algorithm::SIRT, 500);
    c.tol = 1e-6;
    const auto res = solve(s, ops, c);
    const double bn = testing::l2(precondition_apply(Preconditioner::make(c.filter, ops.geom), s));
    CHECK(res.report.converged);
    CHECK(res.report.residual_history.back() <= c.tol * bn);
  }
  SECTION("nonnegative projection") {
    auto c = config(Algorithm::SIRT, 5);
    c.nonnegative = true;
    const auto res = solve(p.noisy, p.ops, c);
    for (const auto& v : res.u) CHECK(v.real() >= 0.0);
  }
}

TEST_CASE("CGLS") {
  const auto& p = problem64();
  SECTION("data residual is monotone and below SIRT") {
    const auto cg = solve(p.clean, p.ops, config(Algorithm::CGLS, 10));
    const auto& h = cg.report.residual_history;
    REQUIRE(h.size() == 10);
    for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] < h[k - 1]);
    const auto sirt = solve(p.clean, p.ops, config(Algorithm::SIRT, 10));
    CHECK(h.back() <= sirt.report.residual_history.back());
  }
  SECTION("recovers a range-space image exactly") {
    const auto ops = TomoOperators::build(ScanGeometry::make(16, 8));
    std::mt19937_64 rng(3);
    const auto y = testing::random_real(ops.range_size(), rng);
    CVec u(ops.domain_size()), s(ops.range_size());
    ops.apply_adjoint(y, u);
    ops.apply(u, s);
    auto c = config(Algorithm::CGLS, 2 * static_cast<int>(ops.domain_size()));
    c.filter = FilterKind::None;
    const auto res = solve(s, ops, c);
    CHECK(testing::rel_err(res.u, u) <= 1e-6);
  }
  SECTION("zero data converges immediately") {
    const auto res = solve(CVec(p.ops.range_size()), p.ops, config(Algorithm::CGLS, 5));
    CHECK(res.report.converged);
    CHECK_FALSE(res.report.breakdown);
    CHECK(res.report.iterations_run == 0);
    for (const auto& v : res.u) CHECK(v == cplx{});
  }
  SECTION("CGS mode matches the dense oracle") {
    const auto g = ScanGeometry::make(12, 8);
    const oracle::DenseOperator dense(g);
    const auto ph = phantom_shepp_logan(12)[0];
    CVec s(g.sinogram_size());
    dense.apply(testing::as_complex(ph.values()), s);
    RealImage sr(8, 12);
    for (std::size_t i = 0; i < s.size(); ++i) sr[i] = s[i].real();
    const auto ref = oracle::dense_lsq_solve(sr, g);
    for (auto km : {KrylovMethod::CGLS, KrylovMethod::CGS}) {
      auto c = config(Algorithm::CGLS, 144);
      c.krylov = km;
      const auto res = solve_cgls(s, dense, c, Preconditioner::identity());
      CHECK(testing::rel_err(res.u, testing::as_complex(ref.values())) <= 1e-4);
    }
  }
}

TEST_CASE("TV") {
  const auto& p = problem64();
  SECTION("noisy ordering TV >= SIRT > FBP") {
    const double fbp = snr_of(solve(p.noisy, p.ops, config(Algorithm::FBP, 1)).u, p.truth);
    const double sirt = snr_of(solve(p.noisy, p.ops, config(Algorithm::SIRT, 10)).u, p.truth);
    const double tv = snr_of(solve(p.noisy, p.ops, config(Algorithm::TV, 10)).u, p.truth);
    CHECK(tv >= sirt);
    CHECK(sirt > fbp);
  }
  SECTION("large mu approaches least squares") {
    const auto g = ScanGeometry::make(8, 32);
    const oracle::DenseOperator dense(g);
    CVec s(g.sinogram_size());
    dense.apply(testing::as_complex(phantom_shepp_logan(8)[0].values()), s);
    const auto ls = solve_cgls(s, dense, config(Algorithm::CGLS, 1000), Preconditioner::identity());
    auto c = config(Algorithm::TV, 1000);
    c.mu = 1e6;
    const auto tv = solve_tv(s, dense, c, Preconditioner::identity(), 8, 8);
    CHECK(testing::rel_err(tv.u, ls.u) <= 0.01);
  }
  SECTION("non-finite data is reported") {
    CVec bad = p.clean;
    bad[17] = std::numeric_limits<double>::quiet_NaN();
    auto c = config(Algorithm::TV, 2);
    c.mu = 1.0;
    CHECK_THROWS_AS(solve(bad, p.ops, c), NonFiniteValue);
  }
}

TEST_CASE("solvers are deterministic, finite and scale-equivariant") {
  const auto& p = problem64();
  for (auto a : {Algorithm::SIRT, Algorithm::CGLS, Algorithm::TV}) {
    const auto c = config(a, 5);
    const auto r1 = solve(p.noisy, p.ops, c);
    const auto r2 = solve(p.noisy, p.ops, c);
    CHECK(r1.u == r2.u);
    CHECK(r1.report.residual_history == r2.report.residual_history);
    CHECK(r1.report.residual_history.size() ==
          static_cast<std::size_t>(r1.report.iterations_run));
    for (const auto& v : r1.u) REQUIRE(std::isfinite(v.real()));
    if (a == Algorithm::TV) continue;  // default mu depends on the data scale

    const double scale = 37.5;
    CVec scaled = p.noisy;
    for (auto& v : scaled) v *= scale;
    auto r3 = solve(scaled, p.ops, c);
    for (auto& v : r3.u) v /= scale;
    CHECK(testing::rel_err(r3.u, r1.u) <= 1e-8);
    for (std::size_t k = 0; k < r1.report.residual_history.size(); ++k)
      CHECK(r3.report.residual_history[k] / scale ==
            Approx(r1.report.residual_history[k]).epsilon(1e-8));
  }
}

TEST_CASE("real and imaginary channels are solved independently") {
  const auto ops = TomoOperators::build(ScanGeometry::make(32, 24));
  std::mt19937_64 rng(12);
  const auto a = testing::random_real(ops.range_size(), rng);
  const auto b = testing::random_real(ops.range_size(), rng);
  CVec ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) ab[i] = {a[i].real(), b[i].real()};
  for (auto alg : {Algorithm::FBP, Algorithm::SIRT, Algorithm::CGLS, Algorithm::TV}) {
    const auto c = config(alg, 6);
    const auto ra = solve(a, ops, c), rb = solve(b, ops, c), rab = solve(ab, ops, c);
    CVec expect(ra.u.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
      expect[i] = {ra.u[i].real(), rb.u[i].real()};
    CHECK(testing::rel_err(rab.u, expect) <= 1e-5);
  }
}
