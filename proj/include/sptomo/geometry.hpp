#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "sptomo/core.hpp"

namespace sptomo {

/// Parallel-beam scan geometry. Detector column j has signed coordinate
/// j - center; the tomogram grid is centered at (n_x/2, n_y/2).
struct ScanGeometry {
  std::size_t n_p = 0;      // detector pixels per row
  std::size_t n_theta = 0;  // projection angles
  std::size_t n_z = 1;      // slices
  std::size_t n_x = 0;
  std::size_t n_y = 0;
  std::vector<double> angles;  // radians, length n_theta
  double center = 0.0;         // rotation axis column, detector pixels

  std::size_t sinogram_size() const noexcept { return n_theta * n_p; }
  std::size_t tomogram_size() const noexcept { return n_x * n_y; }

  /// Angles uniformly covering [0, pi), tomogram n_p x n_p, center n_p/2.
  static ScanGeometry make(std::size_t n_p, std::size_t n_theta,
                           std::size_t n_z = 1,
                           std::optional<double> center = std::nullopt) {
    ScanGeometry g;
    g.n_p = n_p;
    g.n_theta = n_theta;
    g.n_z = n_z;
    g.n_x = n_p;
    g.n_y = n_p;
    g.angles.resize(n_theta);
    for (std::size_t i = 0; i < n_theta; ++i)
      g.angles[i] = std::numbers::pi * static_cast<double>(i) /
                    static_cast<double>(n_theta);
    g.center = center.value_or(static_cast<double>(n_p) / 2.0);
    g.validate();
    return g;
  }

  void validate() const {
    if (n_p < 2) throw InvalidGeometry("n_p must be >= 2");
    if (n_theta < 1) throw InvalidGeometry("n_theta must be >= 1");
    if (n_z < 1) throw InvalidGeometry("n_z must be >= 1");
    if (n_x < 2 || n_y < 2) throw InvalidGeometry("tomogram grid must be >= 2x2");
    if (angles.size() != n_theta)
      throw InvalidGeometry("angle list has " + std::to_string(angles.size()) +
                            " entries, expected " + std::to_string(n_theta));
    for (double a : angles)
      if (!(a >= 0.0 && a < 2.0 * std::numbers::pi))
        throw InvalidGeometry("angle " + std::to_string(a) +
                              " outside [0, 2pi)");
    if (!(center >= 0.0 && center < static_cast<double>(n_p)))
      throw InvalidGeometry("center " + std::to_string(center) +
                            " outside [0, n_p)");
  }

  friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;
};

/// Signed frequency of raw FFT bin j, i.e. ((j + n/2) mod n) - n/2.
inline long fft_frequency(std::size_t j, std::size_t n) noexcept {
  const long h = static_cast<long>(n / 2);
  return static_cast<long>((j + n / 2) % n) - h;
}

/// True for the unpaired Nyquist bin p = -n/2 of an even-length transform.
inline bool is_nyquist(long p, std::size_t n) noexcept {
  return n % 2 == 0 && p == -static_cast<long>(n / 2);
}

using Point2 = std::array<double, 2>;

/// Cartesian grid position of every sinogram sample, theta-major, p-minor:
/// p_i (cos theta_i, sin theta_i) + (n_x/2, n_y/2).
inline std::vector<Point2> polar_coords(const ScanGeometry& geom) {
  std::vector<Point2> out;
  out.reserve(geom.sinogram_size());
  const double cx = static_cast<double>(geom.n_x) / 2.0;
  const double cy = static_cast<double>(geom.n_y) / 2.0;
  for (std::size_t t = 0; t < geom.n_theta; ++t) {
    const double c = std::cos(geom.angles[t]);
    const double s = std::sin(geom.angles[t]);
    for (std::size_t j = 0; j < geom.n_p; ++j) {
      const double p = static_cast<double>(fft_frequency(j, geom.n_p));
      out.push_back({p * c + cx, p * s + cy});
    }
  }
  return out;
}

}  // namespace sptomo
