#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "sptomo/cache.hpp"
#include "sptomo/core.hpp"
#include "sptomo/deapodization.hpp"
#include "sptomo/density.hpp"
#include "sptomo/fft.hpp"
#include "sptomo/filters.hpp"
#include "sptomo/geometry.hpp"
#include "sptomo/gridding.hpp"
#include "sptomo/kernel.hpp"
#include "sptomo/sparse.hpp"

namespace sptomo {

using Sinogram = ComplexImage;  // n_theta x n_p
using Tomogram = ComplexImage;  // n_y x n_x

/// Radon in pixel-length units: with unitary FFTs the chain needs a factor
/// sqrt(n_x n_y / n_p).
inline double operator_scale(const ScanGeometry& g) {
  return std::sqrt(static_cast<double>(g.n_x * g.n_y) /
                   static_cast<double>(g.n_p));
}

namespace detail {

inline void check_sizes(const ScanGeometry& g, const SparseGridCSR& csr,
                        const Deapodization& d) {
  if (csr.n_rows() != g.tomogram_size() || csr.n_cols() != g.sinogram_size())
    throw ShapeMismatch("matrix is " + std::to_string(csr.n_rows()) + "x" +
                        std::to_string(csr.n_cols()) + ", geometry needs " +
                        std::to_string(g.tomogram_size()) + "x" +
                        std::to_string(g.sinogram_size()));
  if (!d.values.same_shape(g.n_y, g.n_x))
    throw ShapeMismatch("deapodization grid does not match geometry");
}

}  // namespace detail

/// F_p^-1 S^H F_2D (k* u), flat buffers.
inline void radon_into(std::span<const cplx> tomo, std::span<cplx> sino,
                       const SparseGridCSR& csr, const Deapodization& deapo,
                       const ScanGeometry& g) {
  detail::check_sizes(g, csr, deapo);
  if (tomo.size() != g.tomogram_size() || sino.size() != g.sinogram_size())
    throw ShapeMismatch("radon: expected " + std::to_string(g.tomogram_size()) +
                        " -> " + std::to_string(g.sinogram_size()) +
                        " samples, got " + std::to_string(tomo.size()) +
                        " -> " + std::to_string(sino.size()));
  CVec w(tomo.size()), grid(tomo.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = deapo.values[i] * tomo[i];
  fft::forward_2d(w, grid, g.n_y, g.n_x);
  csr.adjoint.apply_into(grid, sino);
  fft::rows(sino, g.n_theta, g.n_p, true);
  const double s = operator_scale(g);
  for (auto& v : sino) v *= s;
}

/// k* F_2D^-1 S F_p (sino), flat buffers. With the unfiltered matrix this is
/// the exact adjoint of radon_into; with a filtered one it is iRadon.
inline void backproject_into(std::span<const cplx> sino, std::span<cplx> tomo,
                             const SparseGridCSR& csr,
                             const Deapodization& deapo, const ScanGeometry& g,
                             const FilterSpec* explicit_filter = nullptr) {
  detail::check_sizes(g, csr, deapo);
  if (tomo.size() != g.tomogram_size() || sino.size() != g.sinogram_size())
    throw ShapeMismatch("backprojection: expected " +
                        std::to_string(g.sinogram_size()) + " -> " +
                        std::to_string(g.tomogram_size()) + " samples, got " +
                        std::to_string(sino.size()) + " -> " +
                        std::to_string(tomo.size()));
  CVec x(sino.begin(), sino.end()), grid(tomo.size());
  fft::rows(x, g.n_theta, g.n_p, false);
  if (explicit_filter) {
    if (explicit_filter->weights.size() != x.size())
      throw ShapeMismatch("filter weights do not match the sinogram");
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] *= explicit_filter->weight(i);
  }
  csr.matrix.apply_into(x, grid);
  fft::inverse_2d(grid, tomo, g.n_y, g.n_x);
  const double s = operator_scale(g);
  for (std::size_t i = 0; i < tomo.size(); ++i)
    tomo[i] *= s * deapo.values[i];
}

inline Sinogram radon(const Tomogram& tomo, const SparseGridCSR& csr,
                      const Deapodization& deapo, const ScanGeometry& g) {
  if (!tomo.same_shape(g.n_y, g.n_x))
    throw ShapeMismatch("radon: tomogram shape does not match geometry");
  Sinogram out(g.n_theta, g.n_p);
  radon_into(tomo.span(), out.span(), csr, deapo, g);
  return out;
}

inline Tomogram radon_adjoint(const Sinogram& sino, const SparseGridCSR& csr,
                              const Deapodization& deapo,
                              const ScanGeometry& g) {
  if (!sino.same_shape(g.n_theta, g.n_p))
    throw ShapeMismatch("radon_adjoint: sinogram shape does not match geometry");
  Tomogram out(g.n_y, g.n_x);
  backproject_into(sino.span(), out.span(), csr, deapo, g);
  return out;
}

/// iRadon with the density filter already folded into csr_filtered.
inline Tomogram iradon(const Sinogram& sino, const SparseGridCSR& csr_filtered,
                       const Deapodization& deapo, const ScanGeometry& g) {
  return radon_adjoint(sino, csr_filtered, deapo, g);
}

/// iRadon applying the filter explicitly before the unfiltered SpMV.
inline Tomogram iradon(const Sinogram& sino, const SparseGridCSR& csr,
                       const FilterSpec& filter, const Deapodization& deapo,
                       const ScanGeometry& g) {
  if (!sino.same_shape(g.n_theta, g.n_p))
    throw ShapeMismatch("iradon: sinogram shape does not match geometry");
  Tomogram out(g.n_y, g.n_x);
  backproject_into(sino.span(), out.span(), csr, deapo, g, &filter);
  return out;
}

struct OperatorOptions {
  KernelSpec kernel = default_kernel();
  FilterKind filter = FilterKind::RamLak;
  double fov_fraction = kDefaultFovFraction;
  bool calibrate = true;
  int density_iterations = 50;
  std::optional<std::filesystem::path> cache_dir;
};

/// Everything needed to apply Radon / adjoint / iRadon for one geometry.
/// Immutable after build; safe to share between threads.
struct TomoOperators {
  ScanGeometry geom;
  OperatorOptions options;
  Deapodization deapo;
  SparseGridCSR csr;           // unfiltered: radon and its adjoint
  SparseGridCSR csr_filtered;  // filter (times calibration) folded in
  FilterSpec filter;           // weights and calibration scale
  bool density_converged = true;
  int cache_hits = 0;

  static TomoOperators build(const ScanGeometry& geom,
                             const OperatorOptions& opt = {}) {
    geom.validate();
    TomoOperators ops;
    ops.geom = geom;
    ops.options = opt;
    ops.deapo = deapodization_compute(geom, opt.kernel, opt.fov_fraction);

    auto cached = [&](FilterKind kind, const std::string& extra, auto make) {
      if (!opt.cache_dir) return make();
      const auto key = make_cache_key(geom, opt.kernel, kind, extra);
      try {
        if (auto hit = cache_load(key, *opt.cache_dir)) {
          ++ops.cache_hits;
          return std::move(*hit);
        }
      } catch (const CorruptCache&) {
        // rebuilt and overwritten below
      }
      SparseGridCSR m = make();
      cache_store(key, m, *opt.cache_dir);
      return m;
    };

    ops.csr = cached(FilterKind::None, "", [&] {
      return build_csr(geom, opt.kernel);
    });

    if (opt.filter == FilterKind::Density) {
      auto res = density_filter_solve(ops.csr, geom, opt.kernel,
                                      opt.density_iterations);
      ops.filter = std::move(res.filter);
      ops.density_converged = res.converged;
    } else {
      ops.filter = make_filter(opt.filter, geom);
    }
    ops.filter.scale = opt.calibrate ? ops.calibration_scale() : 1.0;

    std::string extra = "fov=" + std::to_string(opt.fov_fraction) +
                        ";calibrate=" + (opt.calibrate ? "1" : "0");
    if (opt.filter == FilterKind::Density)
      extra += ";density_iters=" + std::to_string(opt.density_iterations);
    if (ops.filter.is_identity()) {
      ops.csr_filtered = ops.csr;
    } else {
      ops.csr_filtered = cached(opt.filter, extra, [&] {
        return build_csr(geom, opt.kernel, ops.filter);
      });
    }
    return ops;
  }

  /// Scale that makes a centered disk (radius 0.8 FOV) reconstruct to mean 1
  /// inside 0.5 FOV.
  double calibration_scale() const {
    const double r_disk = 0.8 * deapo.fov_radius;
    const double r_mean = 0.5 * deapo.fov_radius;
    CVec u(geom.tomogram_size());
    for (std::size_t iy = 0; iy < geom.n_y; ++iy)
      for (std::size_t ix = 0; ix < geom.n_x; ++ix) {
        const double x = ix - geom.n_x / 2.0, y = iy - geom.n_y / 2.0;
        u[iy * geom.n_x + ix] = (x * x + y * y < r_disk * r_disk) ? 1.0 : 0.0;
      }
    CVec s(geom.sinogram_size()), rec(geom.tomogram_size());
    radon_into(u, s, csr, deapo, geom);
    FilterSpec unit = filter;
    unit.scale = 1.0;
    backproject_into(s, rec, csr, deapo, geom, &unit);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t iy = 0; iy < geom.n_y; ++iy)
      for (std::size_t ix = 0; ix < geom.n_x; ++ix) {
        const double x = ix - geom.n_x / 2.0, y = iy - geom.n_y / 2.0;
        if (x * x + y * y < r_mean * r_mean) {
          acc += rec[iy * geom.n_x + ix].real();
          ++count;
        }
      }
    const double mean = count ? acc / count : 0.0;
    if (!(std::abs(mean) > 1e-12))
      throw NearZeroDenominator("filter calibration: disk reconstructs to 0");
    return 1.0 / mean;
  }

  // LinearOperator interface: tomogram (n_y*n_x) -> sinogram (n_theta*n_p).
  std::size_t domain_size() const { return geom.tomogram_size(); }
  std::size_t range_size() const { return geom.sinogram_size(); }

  void apply(std::span<const cplx> u, std::span<cplx> s) const {
    radon_into(u, s, csr, deapo, geom);
  }
  void apply_adjoint(std::span<const cplx> s, std::span<cplx> u) const {
    backproject_into(s, u, csr, deapo, geom);
  }
  void apply_inverse(std::span<const cplx> s, std::span<cplx> u) const {
    backproject_into(s, u, csr_filtered, deapo, geom);
  }

  Sinogram radon(const Tomogram& u) const {
    return sptomo::radon(u, csr, deapo, geom);
  }
  Tomogram radon_adjoint(const Sinogram& s) const {
    return sptomo::radon_adjoint(s, csr, deapo, geom);
  }
  Tomogram iradon(const Sinogram& s) const {
    return sptomo::iradon(s, csr_filtered, deapo, geom);
  }
  Tomogram iradon_explicit(const Sinogram& s) const {
    return sptomo::iradon(s, csr, filter, deapo, geom);
  }
};

}  // namespace sptomo
