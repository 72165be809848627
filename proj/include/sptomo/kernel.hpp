#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "sptomo/core.hpp"

namespace sptomo {

enum class KernelFamily { KaiserBessel, Gaussian };

inline std::string to_string(KernelFamily f) {
  return f == KernelFamily::KaiserBessel ? "kb" : "gauss";
}

/// Compact gridding kernel K(t), t in grid cells, normalized to K(0) = 1.
/// `shape` is beta for Kaiser-Bessel and sigma for the Gaussian.
struct KernelSpec {
  KernelFamily family = KernelFamily::KaiserBessel;
  int width = 5;
  double shape = 8.0;

  static KernelSpec kaiser_bessel(int width) {
    return {KernelFamily::KaiserBessel, width, 1.6 * width};
  }
  static KernelSpec kaiser_bessel(int width, double beta) {
    return {KernelFamily::KaiserBessel, width, beta};
  }
  static KernelSpec gaussian(int width) {
    return {KernelFamily::Gaussian, width, width / 6.0};
  }
  static KernelSpec gaussian(int width, double sigma) {
    return {KernelFamily::Gaussian, width, sigma};
  }

  int half_width() const noexcept { return width / 2; }

  void validate() const {
    if (width < 3 || width % 2 == 0)
      throw InvalidArgument("kernel width must be an odd integer >= 3, got " +
                            std::to_string(width));
    if (!(shape > 0.0) || !std::isfinite(shape))
      throw InvalidArgument("kernel shape parameter must be positive");
  }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline KernelSpec default_kernel() { return KernelSpec::kaiser_bessel(5); }

inline double kernel_eval(const KernelSpec& spec, double t) {
  const double half = 0.5 * spec.width;
  const double a = std::abs(t);
  if (a >= half) return 0.0;
  switch (spec.family) {
    case KernelFamily::KaiserBessel: {
      const double r = a / half;
      return std::cyl_bessel_i(0.0, spec.shape * std::sqrt(1.0 - r * r)) /
             std::cyl_bessel_i(0.0, spec.shape);
    }
    case KernelFamily::Gaussian:
      return std::exp(-0.5 * (a * a) / (spec.shape * spec.shape));
  }
  return 0.0;
}

/// Continuous inverse Fourier transform of K at image offset x on an n-point
/// axis: integral of K(t) cos(2 pi t x / n) dt over the support. Composite
/// Gauss-Legendre, 5 nodes per panel.
inline double kernel_fourier(const KernelSpec& spec, double x, std::size_t n) {
  static constexpr double nodes[5] = {-0.9061798459386640, -0.5384693101056831,
                                      0.0, 0.5384693101056831,
                                      0.9061798459386640};
  static constexpr double weights[5] = {0.2369268850561891, 0.4786286704993665,
                                        0.5688888888888889, 0.4786286704993665,
                                        0.2369268850561891};
  constexpr int panels = 256;
  const double half = 0.5 * spec.width;
  const double h = half / panels;  // integrate over [0, half], double it
  const double omega = 2.0 * std::numbers::pi * x / static_cast<double>(n);
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int k = 0; k < 5; ++k) {
      const double t = mid + 0.5 * h * nodes[k];
      acc += weights[k] * kernel_eval(spec, t) * std::cos(omega * t);
    }
  }
  return acc * h;  // 2 (symmetry) * h/2 (panel Jacobian)
}

/// Integer window offsets -w/2 .. w/2. The 2D stencil is the outer product
/// (s_x along rows, s_y along columns), flattened x-major.
struct StencilGrid {
  std::vector<int> offsets;

  static StencilGrid make(const KernelSpec& spec) {
    StencilGrid s;
    for (int k = -spec.half_width(); k <= spec.half_width(); ++k)
      s.offsets.push_back(k);
    return s;
  }

  std::size_t width() const noexcept { return offsets.size(); }
  std::size_t size() const noexcept { return offsets.size() * offsets.size(); }
  int sx(std::size_t flat) const { return offsets[flat / offsets.size()]; }
  int sy(std::size_t flat) const { return offsets[flat % offsets.size()]; }
};

}  // namespace sptomo
