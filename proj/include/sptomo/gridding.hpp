#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>

#include "sptomo/core.hpp"
#include "sptomo/filters.hpp"
#include "sptomo/geometry.hpp"
#include "sptomo/kernel.hpp"
#include "sptomo/sparse.hpp"

namespace sptomo {

/// Valid grid band along an axis of length n. For even n index 0 is the
/// unpaired Nyquist row, which is excluded so the matrix stays
/// Hermitian-symmetric (real tomogram <-> real sinogram).
inline bool in_band(long g, std::size_t n) noexcept {
  const long lo = (n % 2 == 0) ? 1 : 0;
  return g >= lo && g <= static_cast<long>(n) - 1;
}

/// Row index of grid point (gx, gy).
inline std::int64_t grid_map(long gx, long gy, std::size_t n_y) noexcept {
  return static_cast<std::int64_t>(gx) * static_cast<std::int64_t>(n_y) + gy;
}

/// Appends the k_w^2 entries of one sample at centered position (qx, qy)
/// with detector frequency p. Out-of-band rows get the kOutOfBand sentinel.
inline void grid_sample_entries(SparseCOO& coo, std::int64_t col, double qx,
                                double qy, long p, const ScanGeometry& geom,
                                const KernelSpec& spec, double weight = 1.0,
                                bool drop = false) {
  // nearbyint rounds half to even under the default rounding mode.
  const double rx = std::nearbyint(qx), ry = std::nearbyint(qy);
  const double fx = qx - rx, fy = qy - ry;
  const long bx = static_cast<long>(rx) + static_cast<long>(geom.n_x / 2);
  const long by = static_cast<long>(ry) + static_cast<long>(geom.n_y / 2);
  const cplx ramp = std::polar(
      weight, 2.0 * std::numbers::pi * geom.center * static_cast<double>(p) /
                  static_cast<double>(geom.n_p));
  const int h = spec.half_width();
  for (int sx = -h; sx <= h; ++sx) {
    const double kx = kernel_eval(spec, fx - sx);
    for (int sy = -h; sy <= h; ++sy) {
      const long gx = bx + sx, gy = by + sy;
      if (drop || !in_band(gx, geom.n_x) || !in_band(gy, geom.n_y)) {
        coo.push(kOutOfBand, col, cplx{});
        continue;
      }
      const double sign = ((gx + gy) % 2 == 0) ? 1.0 : -1.0;
      coo.push(grid_map(gx, gy, geom.n_y), col,
               sign * kx * kernel_eval(spec, fy - sy) * ramp);
    }
  }
}

/// Raw (unpruned) interpolation matrix: exactly n_theta * n_p * k_w^2
/// entries. A non-identity filter is folded into the values.
inline SparseCOO build_coo(const ScanGeometry& geom, const KernelSpec& spec,
                           const FilterSpec& filter = {}) {
  geom.validate();
  spec.validate();
  const bool folded = !filter.is_identity();
  if (folded && filter.weights.size() != geom.sinogram_size())
    throw ShapeMismatch("filter has " + std::to_string(filter.weights.size()) +
                        " weights, geometry has " +
                        std::to_string(geom.sinogram_size()) + " samples");
  SparseCOO coo;
  coo.n_rows = geom.tomogram_size();
  coo.n_cols = geom.sinogram_size();
  const std::size_t per = static_cast<std::size_t>(spec.width) * spec.width;
  coo.rows.reserve(coo.n_cols * per);
  coo.cols.reserve(coo.n_cols * per);
  coo.vals.reserve(coo.n_cols * per);
  for (std::size_t t = 0; t < geom.n_theta; ++t) {
    const double c = std::cos(geom.angles[t]), s = std::sin(geom.angles[t]);
    for (std::size_t j = 0; j < geom.n_p; ++j) {
      const long p = fft_frequency(j, geom.n_p);
      const std::size_t i = t * geom.n_p + j;
      const double w = folded ? filter.weight(i) : 1.0;
      grid_sample_entries(coo, static_cast<std::int64_t>(i),
                          static_cast<double>(p) * c,
                          static_cast<double>(p) * s, p, geom, spec, w,
                          is_nyquist(p, geom.n_p));
    }
  }
  return coo;
}

/// build_coo -> prune -> coo_to_csr.
inline SparseGridCSR build_csr(const ScanGeometry& geom, const KernelSpec& spec,
                               const FilterSpec& filter = {},
                               double prune_threshold = 0.0) {
  return coo_to_csr(prune(build_coo(geom, spec, filter), prune_threshold));
}

}  // namespace sptomo
