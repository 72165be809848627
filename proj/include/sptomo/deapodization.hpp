#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sptomo/core.hpp"
#include "sptomo/geometry.hpp"
#include "sptomo/kernel.hpp"

namespace sptomo {

/// Fraction of min(n_x, n_y)/2 used as the field-of-view radius. At the very
/// rim of a non-oversampled grid the aliased kernel image is as large as the
/// main lobe, so the support stops short of it.
inline constexpr double kDefaultFovFraction = 0.95;

/// Checkerboard sign of tomogram pixel (ix, iy); +1 at the grid center.
inline double checkerboard(std::size_t ix, std::size_t iy, std::size_t n_x,
                           std::size_t n_y) noexcept {
  const long parity = static_cast<long>(ix) - static_cast<long>(n_x / 2) +
                      static_cast<long>(iy) - static_cast<long>(n_y / 2);
  return (parity % 2 == 0) ? 1.0 : -1.0;
}

/// Real-space correction k* for the gridding kernel: checkerboard / (F*K)
/// inside the field of view, 0 outside. Layout (n_y x n_x).
struct Deapodization {
  RealImage values;
  Grid2D<unsigned char> support_mask;
  double fov_radius = 0.0;
};

/// Separable inverse transform of K on the grid, F*K(x) F*K(y), (n_y x n_x).
inline RealImage kernel_fourier_grid(const ScanGeometry& geom,
                                     const KernelSpec& spec) {
  std::vector<double> fx(geom.n_x), fy(geom.n_y);
  for (std::size_t i = 0; i < geom.n_x; ++i)
    fx[i] = kernel_fourier(
        spec, static_cast<double>(i) - static_cast<double>(geom.n_x) / 2.0,
        geom.n_x);
  for (std::size_t i = 0; i < geom.n_y; ++i)
    fy[i] = kernel_fourier(
        spec, static_cast<double>(i) - static_cast<double>(geom.n_y) / 2.0,
        geom.n_y);
  RealImage out(geom.n_y, geom.n_x);
  for (std::size_t iy = 0; iy < geom.n_y; ++iy)
    for (std::size_t ix = 0; ix < geom.n_x; ++ix) out(iy, ix) = fx[ix] * fy[iy];
  return out;
}

inline Deapodization deapodization_compute(
    const ScanGeometry& geom, const KernelSpec& spec,
    double fov_fraction = kDefaultFovFraction) {
  geom.validate();
  spec.validate();
  if (geom.n_x % 2 != 0 || geom.n_y % 2 != 0)
    throw InvalidGeometry(
        "the FFT-shift checkerboard needs even tomogram dimensions");
  if (!(fov_fraction > 0.0 && fov_fraction <= 1.0))
    throw InvalidArgument("fov_fraction must be in (0, 1]");

  const RealImage fk = kernel_fourier_grid(geom, spec);
  double peak = 0.0;
  for (double v : fk.values()) peak = std::max(peak, std::abs(v));
  const double eps = 1e-6 * peak;

  Deapodization d;
  d.fov_radius =
      fov_fraction * static_cast<double>(std::min(geom.n_x, geom.n_y)) / 2.0;
  d.values = RealImage(geom.n_y, geom.n_x);
  d.support_mask = Grid2D<unsigned char>(geom.n_y, geom.n_x, 0);
  const double r2 = d.fov_radius * d.fov_radius;
  for (std::size_t iy = 0; iy < geom.n_y; ++iy) {
    const double y = static_cast<double>(iy) - static_cast<double>(geom.n_y) / 2.0;
    for (std::size_t ix = 0; ix < geom.n_x; ++ix) {
      const double x =
          static_cast<double>(ix) - static_cast<double>(geom.n_x) / 2.0;
      if (x * x + y * y >= r2) continue;
      const double denom = fk(iy, ix);
      // F*K is positive at the origin; a sign change means it crossed zero
      // between grid points.
      if (denom < eps)
        throw NearZeroDenominator(
            "kernel transform " + std::to_string(denom) + " at pixel (" +
            std::to_string(ix) + ", " + std::to_string(iy) +
            "); kernel too narrow for this grid");
      d.support_mask(iy, ix) = 1;
      d.values(iy, ix) = checkerboard(ix, iy, geom.n_x, geom.n_y) / denom;
    }
  }
  return d;
}

}  // namespace sptomo
