#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sptomo/core.hpp"
#include "sptomo/fft.hpp"
#include "sptomo/geometry.hpp"

namespace sptomo {

enum class FilterKind { None, RamLak, SheppLogan, Hamming, Density };

inline std::string to_string(FilterKind k) {
  switch (k) {
    case FilterKind::None: return "none";
    case FilterKind::RamLak: return "ramlak";
    case FilterKind::SheppLogan: return "shepplogan";
    case FilterKind::Hamming: return "hamming";
    case FilterKind::Density: return "density";
  }
  return "?";
}

inline FilterKind filter_from_string(const std::string& s) {
  for (auto k : {FilterKind::None, FilterKind::RamLak, FilterKind::SheppLogan,
                 FilterKind::Hamming, FilterKind::Density})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown filter '" + s + "'");
}

/// Radial filter response at normalized frequency f in [-1/2, 1/2).
inline double radial_filter(FilterKind kind, double f) {
  const double a = std::abs(f);
  switch (kind) {
    case FilterKind::None: return 1.0;
    case FilterKind::RamLak: return a;
    case FilterKind::SheppLogan: {
      if (f == 0.0) return 0.0;
      const double x = std::numbers::pi * f;
      return a * std::sin(x) / x;
    }
    case FilterKind::Hamming:
      return a * (0.54 + 0.46 * std::cos(2.0 * std::numbers::pi * f));
    case FilterKind::Density:
      break;
  }
  throw InvalidArgument("density weights are not radial; use density_filter_solve");
}

/// Density compensation D: one weight per sinogram sample (theta-major, raw
/// FFT bin order along p) times a global calibration scale.
struct FilterSpec {
  FilterKind kind = FilterKind::None;
  RVec weights;
  double scale = 1.0;

  bool is_identity() const noexcept {
    return kind == FilterKind::None && scale == 1.0;
  }
  double weight(std::size_t sample) const { return scale * weights[sample]; }
};

inline FilterSpec make_filter(FilterKind kind, const ScanGeometry& geom) {
  FilterSpec f;
  f.kind = kind;
  f.weights.resize(geom.sinogram_size());
  for (std::size_t j = 0; j < geom.n_p; ++j) {
    const double freq = static_cast<double>(fft_frequency(j, geom.n_p)) /
                        static_cast<double>(geom.n_p);
    const double w = radial_filter(kind, freq);
    for (std::size_t t = 0; t < geom.n_theta; ++t)
      f.weights[t * geom.n_p + j] = w;
  }
  return f;
}

/// P = F^H D^(1/2) F along p. An empty weight vector is the identity, which
/// is what operators without a sinogram layout use.
struct Preconditioner {
  RVec sqrt_weights;  // n_theta * n_p, or empty
  std::size_t n_theta = 0;
  std::size_t n_p = 0;

  bool is_identity() const noexcept { return sqrt_weights.empty(); }

  static Preconditioner identity() { return {}; }

  static Preconditioner from_filter(const FilterSpec& f,
                                    const ScanGeometry& geom) {
    Preconditioner p;
    p.n_theta = geom.n_theta;
    p.n_p = geom.n_p;
    p.sqrt_weights.resize(geom.sinogram_size());
    for (std::size_t i = 0; i < p.sqrt_weights.size(); ++i) {
      const double w = f.weights.at(i);
      if (w < 0.0) throw InvalidArgument("filter weights must be >= 0");
      p.sqrt_weights[i] = std::sqrt(w);
    }
    return p;
  }

  static Preconditioner make(FilterKind kind, const ScanGeometry& geom) {
    return from_filter(make_filter(kind, geom), geom);
  }
};

/// In-place preconditioning of a stack of sinograms (each n_theta * n_p).
inline void precondition_inplace(const Preconditioner& pre,
                                 std::span<cplx> data) {
  if (pre.is_identity()) return;
  const std::size_t block = pre.n_theta * pre.n_p;
  if (block == 0 || data.size() % block != 0)
    throw ShapeMismatch("preconditioner expects multiples of " +
                        std::to_string(block) + " samples, got " +
                        std::to_string(data.size()));
  for (std::size_t off = 0; off < data.size(); off += block) {
    auto s = data.subspan(off, block);
    fft::rows(s, pre.n_theta, pre.n_p, false);
    for (std::size_t i = 0; i < block; ++i) s[i] *= pre.sqrt_weights[i];
    fft::rows(s, pre.n_theta, pre.n_p, true);
  }
}

inline CVec precondition_apply(const Preconditioner& pre,
                               std::span<const cplx> residual) {
  CVec out(residual.begin(), residual.end());
  precondition_inplace(pre, out);
  return out;
}

}  // namespace sptomo
