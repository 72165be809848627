#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "sptomo/cache.hpp"
#include "sptomo/gridding.hpp"
#include "sptomo/sparse.hpp"
#include "support.hpp"

using namespace sptomo;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct Dense {
  std::size_t rows, cols;
  CVec a;
  CVec mul(const CVec& x) const {
    CVec y(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) y[r] += a[r * cols + c] * x[c];
    return y;
  }
};

// Random COO with many duplicate coordinates plus the dense accumulation.
std::pair<SparseCOO, Dense> random_coo(std::size_t m, std::size_t n,
                                       std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int64_t> ri(0, m - 1), ci(0, n - 1);
  std::normal_distribution<double> nd;
  SparseCOO coo;
  coo.n_rows = m;
  coo.n_cols = n;
  Dense d{m, n, CVec(m * n)};
  for (std::size_t k = 0; k < count; ++k) {
    const auto r = ri(rng), c = ci(rng);
    const cplx v{nd(rng), nd(rng)};
    coo.push(r, c, v);
    d.a[r * n + c] += v;
  }
  return {coo, d};
}

void check_canonical(const CsrMatrix& a) {
  REQUIRE(a.row_ptr.size() == a.n_rows + 1);
  CHECK(a.row_ptr.front() == 0);
  CHECK(a.row_ptr.back() == a.nnz());
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    CHECK(a.row_ptr[r] <= a.row_ptr[r + 1]);
    for (auto k = a.row_ptr[r] + 1; k < a.row_ptr[r + 1]; ++k)
      CHECK(a.col_idx[k - 1] < a.col_idx[k]);
  }
  for (auto c : a.col_idx) CHECK(c < a.n_cols);
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sptomo_test_" + name + "_" +
                                          std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("raw entry count is n_theta * n_p * k_w^2") {
  const auto g = ScanGeometry::make(5, 3);
  const auto coo = build_coo(g, KernelSpec::kaiser_bessel(3));
  CHECK(coo.nnz() == 135);
  CHECK(build_coo(ScanGeometry::make(16, 7), KernelSpec::kaiser_bessel(5)).nnz() ==
        16 * 7 * 25);
}

TEST_CASE("grid-exact sample with even p has unit magnitude at the stencil center") {
  const auto g = ScanGeometry::make(8, 1);
  SparseCOO coo;
  coo.n_rows = 64;
  coo.n_cols = 8;
  grid_sample_entries(coo, 0, 2.0, 0.0, 2, g, KernelSpec::kaiser_bessel(3));
  REQUIRE(coo.nnz() == 9);
  // offsets (sx, sy) enumerated x-major; (0, 0) is entry 4
  CHECK(std::abs(coo.vals[4]) == Approx(1.0).epsilon(1e-15));
  CHECK(coo.rows[4] == grid_map(6, 4, 8));
}

TEST_CASE("single sample rows follow the lexicographic map") {
  ScanGeometry g;
  g.n_p = g.n_x = g.n_y = 8;
  g.n_theta = 1;
  g.angles = {0.0};
  g.center = 4.0;
  const auto coo = build_coo(g, KernelSpec::kaiser_bessel(3));
  // p = 1 is detector index 1
  std::vector<std::int64_t> rows(coo.rows.begin() + 9, coo.rows.begin() + 18);
  std::vector<std::int64_t> expect;
  for (int sx = -1; sx <= 1; ++sx)
    for (int sy = -1; sy <= 1; ++sy) expect.push_back((5 + sx) * 8 + (4 + sy));
  CHECK(rows == expect);
}

TEST_CASE("prune") {
  SECTION("all-zero values vanish") {
    SparseCOO coo;
    coo.n_rows = coo.n_cols = 4;
    for (int i = 0; i < 4; ++i) coo.push(i, i, cplx{});
    CHECK(prune(coo).nnz() == 0);
  }
  SECTION("threshold 0 removes only out-of-bound entries") {
    SparseCOO coo;
    coo.n_rows = coo.n_cols = 4;
    coo.push(0, 0, 1e-300);
    coo.push(kOutOfBand, 1, 1.0);
    coo.push(4, 1, 1.0);
    coo.push(3, 3, -2.0);
    const auto p = prune(coo);
    CHECK(p.nnz() == 2);
    CHECK(prune(coo, 1.0).nnz() == 1);
  }
  SECTION("edge sample keeps only in-band stencil points") {
    const auto g = ScanGeometry::make(8, 1);
    // grid x = round(q) + 4, band is [1, 7]
    const auto kept = [&](double q) {
      SparseCOO coo;
      coo.n_rows = 64;
      coo.n_cols = 8;
      grid_sample_entries(coo, 0, q, 0.0, 3, g, KernelSpec::kaiser_bessel(3));
      CHECK(coo.nnz() == 9);
      return prune(coo).nnz();
    };
    CHECK(kept(3.4) == 6);  // x in {6, 7, 8}
    CHECK(kept(2.4) == 9);  // x in {5, 6, 7}
    CHECK(kept(3.5) == 3);  // rounds to 4: x in {7, 8, 9}
  }
}

TEST_CASE("coo_to_csr") {
  SECTION("empty") {
    SparseCOO coo;
    coo.n_rows = 3;
    coo.n_cols = 2;
    const auto m = coo_to_csr(coo);
    CHECK(m.matrix.row_ptr == std::vector<std::uint64_t>(4, 0));
    CHECK(m.adjoint.row_ptr == std::vector<std::uint64_t>(3, 0));
  }
  SECTION("2x2 by hand") {
    SparseCOO coo;
    coo.n_rows = coo.n_cols = 2;
    coo.push(1, 1, 4.0);
    coo.push(0, 1, 2.0);
    coo.push(1, 0, 3.0);
    coo.push(0, 0, 1.0);
    const auto m = coo_to_csr(coo);
    const CVec y = spmv(m.matrix, CVec{1.0, 0.0});
    CHECK(y == CVec{1.0, 3.0});
    check_canonical(m.matrix);
  }
  SECTION("duplicates are summed") {
    std::mt19937_64 rng(5);
    auto [coo, dense] = random_coo(50, 40, 900, rng);
    const auto m = coo_to_csr(coo);
    check_canonical(m.matrix);
    check_canonical(m.adjoint);
    const auto x = testing::random_complex(40, rng);
    CHECK(testing::rel_err(m.matrix.apply(x), dense.mul(x)) < 1e-12);
  }
  SECTION("out-of-range rows are rejected") {
    SparseCOO coo;
    coo.n_rows = coo.n_cols = 2;
    coo.push(2, 0, 1.0);
    CHECK_THROWS_AS(coo_to_csr(coo), ShapeMismatch);
  }
}

TEST_CASE("spmv and spmm") {
  SECTION("identity pattern") {
    SparseCOO coo;
    coo.n_rows = coo.n_cols = 6;
    for (int i = 0; i < 6; ++i) coo.push(i, i, 1.0);
    const auto m = coo_to_csr(coo);
    std::mt19937_64 rng(1);
    const auto x = testing::random_complex(6, rng);
    CHECK(spmv(m.matrix, x) == x);
  }
  SECTION("basis vectors reproduce columns") {
    const double a[3][3] = {{1, 0, 2}, {0, 3, 0}, {4, 5, 6}};
    SparseCOO coo;
    coo.n_rows = coo.n_cols = 3;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        if (a[r][c] != 0) coo.push(r, c, a[r][c]);
    const auto m = coo_to_csr(coo);
    for (int c = 0; c < 3; ++c) {
      CVec e(3);
      e[c] = 1.0;
      const auto y = spmv(m.matrix, e);
      for (int r = 0; r < 3; ++r) CHECK(y[r] == cplx(a[r][c]));
    }
  }
  SECTION("random 200x150 against dense") {
    std::mt19937_64 rng(9);
    auto [coo, dense] = random_coo(200, 150, 3000, rng);
    const auto m = coo_to_csr(coo);
    const auto x = testing::random_complex(150, rng);
    CHECK(testing::rel_err(spmv(m.matrix, x), dense.mul(x)) < 1e-12);

    const std::size_t k = 3;
    const auto xs = testing::random_complex(150 * k, rng);
    const auto ys = spmm(m.matrix, xs, k);
    for (std::size_t c = 0; c < k; ++c) {
      CVec col(150), ycol(200);
      for (std::size_t i = 0; i < 150; ++i) col[i] = xs[i * k + c];
      for (std::size_t i = 0; i < 200; ++i) ycol[i] = ys[i * k + c];
      CHECK(testing::rel_err(ycol, dense.mul(col)) < 1e-12);
    }
  }
  SECTION("shape mismatch") {
    SparseCOO coo;
    coo.n_rows = 3;
    coo.n_cols = 2;
    const auto m = coo_to_csr(coo);
    CHECK_THROWS_AS(spmv(m.matrix, CVec(3)), ShapeMismatch);
    CHECK_THROWS_AS(spmm(m.matrix, CVec(5), 2), ShapeMismatch);
  }
}

TEST_CASE("stored transpose is the adjoint") {
  std::mt19937_64 rng(21);
  for (auto [n, nth, kw] : {std::tuple{16, 9, 3}, {32, 17, 5}, {15, 8, 3}}) {
    ScanGeometry g = ScanGeometry::make(n, nth);
    const auto m = build_csr(g, KernelSpec::kaiser_bessel(kw));
    check_canonical(m.matrix);
    check_canonical(m.adjoint);
    const auto x = testing::random_complex(m.n_cols(), rng);
    const auto y = testing::random_complex(m.n_rows(), rng);
    const cplx lhs = testing::inner(y, m.matrix.apply(x));
    const cplx rhs = testing::inner(m.adjoint.apply(y), x);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
  }
}

TEST_CASE("nnz and sparsity bounds") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> np(8, 40), nt(1, 30), kw(1, 3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = ScanGeometry::make(2 * (np(rng) / 2), nt(rng));
    const int w = 2 * kw(rng) + 1;
    const auto m = build_csr(g, KernelSpec::kaiser_bessel(w));
    const double bound = static_cast<double>(g.n_theta * g.n_p * w * w);
    CHECK(m.nnz() <= bound);
    const double sparsity =
        static_cast<double>(m.nnz()) / (static_cast<double>(m.n_rows()) * m.n_cols());
    CHECK(sparsity <= static_cast<double>(w * w) / (g.n_x * g.n_y));
  }
}

TEST_CASE("entries have unit phase and bounded magnitude") {
  const auto g = ScanGeometry::make(16, 11, 1, 7.3);
  const auto spec = KernelSpec::kaiser_bessel(5);
  const auto coo = prune(build_coo(g, spec));
  for (std::size_t k = 0; k < coo.nnz(); ++k) CHECK(std::abs(coo.vals[k]) <= 1.0 + 1e-15);

  // Reconstruct the kernel product for one sample and compare magnitudes.
  SparseCOO one;
  one.n_rows = g.tomogram_size();
  one.n_cols = g.sinogram_size();
  const double qx = 3.0 * std::cos(0.7), qy = 3.0 * std::sin(0.7);
  grid_sample_entries(one, 0, qx, qy, 3, g, spec);
  const double fx = qx - std::nearbyint(qx), fy = qy - std::nearbyint(qy);
  std::size_t k = 0;
  for (int sx = -2; sx <= 2; ++sx)
    for (int sy = -2; sy <= 2; ++sy, ++k)
      CHECK(std::abs(one.vals[k]) ==
            Approx(kernel_eval(spec, fx - sx) * kernel_eval(spec, fy - sy)).epsilon(1e-14));
}

TEST_CASE("builds are deterministic") {
  const auto g = ScanGeometry::make(24, 13);
  const auto spec = KernelSpec::kaiser_bessel(5);
  CHECK(build_csr(g, spec) == build_csr(g, spec));
}

TEST_CASE("cache round trip and misses") {
  const auto dir = scratch_dir("cache");
  const auto g = ScanGeometry::make(16, 9);
  const auto spec = KernelSpec::kaiser_bessel(3);
  const auto m = build_csr(g, spec);
  const auto key = make_cache_key(g, spec, FilterKind::None);
  CHECK(key.digest.size() == 64);

  CHECK_FALSE(cache_load(key, dir).has_value());
  cache_store(key, m, dir);
  const auto back = cache_load(key, dir);
  REQUIRE(back.has_value());
  CHECK(*back == m);

  const auto g2 = ScanGeometry::make(16, 9, 1, g.center + 0.5);
  const auto key2 = make_cache_key(g2, spec, FilterKind::None);
  CHECK(key2.digest != key.digest);
  CHECK_FALSE(cache_load(key2, dir).has_value());
  CHECK(make_cache_key(g, KernelSpec::kaiser_bessel(5), FilterKind::None).digest != key.digest);
  CHECK(make_cache_key(g, spec, FilterKind::RamLak).digest != key.digest);
  CHECK(make_cache_key(g, spec, FilterKind::None) == key);
  fs::remove_all(dir);
}

TEST_CASE("corrupt cache files are detected") {
  const auto dir = scratch_dir("corrupt");
  const auto g = ScanGeometry::make(8, 4);
  const auto spec = KernelSpec::kaiser_bessel(3);
  const auto key = make_cache_key(g, spec, FilterKind::None);
  cache_store(key, build_csr(g, spec), dir);
  const auto path = cache_path(key, dir);

  SECTION("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(cache_load(key, dir), CorruptCache);
  }
  SECTION("truncated") {
    fs::resize_file(path, fs::file_size(path) - 9);
    CHECK_THROWS_AS(cache_load(key, dir), CorruptCache);
  }
  SECTION("trailing bytes") {
    std::ofstream(path, std::ios::app | std::ios::binary) << "junk";
    CHECK_THROWS_AS(cache_load(key, dir), CorruptCache);
  }
  SECTION("file stored under another key") {
    const auto other = make_cache_key(ScanGeometry::make(8, 5), spec, FilterKind::None);
    fs::copy_file(path, cache_path(other, dir));
    CHECK_THROWS_AS(cache_load(other, dir), CorruptCache);
  }
  fs::remove_all(dir);
}
