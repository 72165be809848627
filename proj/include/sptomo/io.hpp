#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sptomo/core.hpp"

namespace sptomo {

// ---------------------------------------------------------------- volumes

enum class VolumeKind : std::uint8_t { Sinogram = 0, Tomogram = 1, Intensity = 2 };

inline constexpr char kVolumeMagic[8] = {'S', 'P', 'T', 'O', 'M', 'O', '0', '1'};
inline constexpr std::uint32_t kVolumeVersion = 1;

/// A (d0 x d1 x d2) float32 stack; sinograms are (n_z, n_theta, n_p),
/// tomograms (n_z, n_y, n_x).
struct VolumeFile {
  VolumeKind kind = VolumeKind::Tomogram;
  std::array<std::uint64_t, 3> dims{};
  double center = 0.0;
  std::vector<double> angles;  // only for sinogram / intensity
  std::vector<float> payload;

  bool has_angles() const { return kind != VolumeKind::Tomogram; }
  std::size_t slice_size() const { return dims[1] * dims[2]; }

  friend bool operator==(const VolumeFile&, const VolumeFile&) = default;
};

namespace detail {
template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError(path + ": truncated header");
  return v;
}
}  // namespace detail

inline void write_volume(const std::filesystem::path& path,
                         const VolumeFile& v) {
  static_assert(std::endian::native == std::endian::little);
  const std::uint64_t n = v.dims[0] * v.dims[1] * v.dims[2];
  if (v.payload.size() != n)
    throw ShapeMismatch("volume payload has " + std::to_string(v.payload.size()) +
                        " values, dims need " + std::to_string(n));
  if (!v.has_angles() && !v.angles.empty())
    throw InvalidArgument("tomogram volumes carry no angles");
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write(kVolumeMagic, 8);
    detail::put(os, kVolumeVersion);
    detail::put(os, static_cast<std::uint8_t>(v.kind));
    for (auto d : v.dims) detail::put(os, d);
    detail::put(os, v.center);
    detail::put<std::uint64_t>(os, v.angles.size());
    for (double a : v.angles) detail::put(os, a);
    os.write(reinterpret_cast<const char*>(v.payload.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
    if (!os) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move output into " + path.string());
}

inline VolumeFile read_volume(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + name);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + name);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kVolumeMagic, 8) != 0)
    throw IoError(name + ": not a volume file (bad magic)");
  if (detail::get<std::uint32_t>(is, name) != kVolumeVersion)
    throw IoError(name + ": unsupported version");
  VolumeFile v;
  const auto kind = detail::get<std::uint8_t>(is, name);
  if (kind > 2) throw IoError(name + ": unknown kind " + std::to_string(kind));
  v.kind = static_cast<VolumeKind>(kind);
  for (auto& d : v.dims) d = detail::get<std::uint64_t>(is, name);
  v.center = detail::get<double>(is, name);
  const auto n_angles = detail::get<std::uint64_t>(is, name);
  if (!v.has_angles() && n_angles != 0)
    throw IoError(name + ": tomogram with an angle list");
  const std::uint64_t header = 8 + 4 + 1 + 24 + 8 + 8;
  if (n_angles > size / 8) throw IoError(name + ": angle count exceeds file");
  v.angles.resize(n_angles);
  for (auto& a : v.angles) a = detail::get<double>(is, name);
  const std::uint64_t n = v.dims[0] * v.dims[1] * v.dims[2];
  if (v.dims[1] != 0 && v.dims[2] != 0 &&
      (v.dims[0] > std::numeric_limits<std::uint64_t>::max() / v.dims[1] /
                       v.dims[2]))
    throw IoError(name + ": dims overflow");
  if (header + 8 * n_angles + 4 * n != size)
    throw IoError(name + ": payload length does not match dims");
  v.payload.resize(n);
  is.read(reinterpret_cast<char*>(v.payload.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (!is) throw IoError(name + ": truncated payload");
  return v;
}

// ---------------------------------------------------------- normalization

/// -ln(I / I0) elementwise; I is floored at 1e-9 max(I). I0 has either one
/// value or one per element of I (or per element of one slice, repeated).
inline std::vector<double> normalize(std::span<const double> intensity,
                                     std::span<const double> flat) {
  if (flat.empty() ||
      !(flat.size() == 1 || intensity.size() % flat.size() == 0))
    throw ShapeMismatch("flat field must be scalar or tile the intensity stack");
  for (double f : flat)
    if (!(f > 0.0)) throw InvalidFlatField("flat field has a value <= 0");
  double peak = 0.0;
  for (double v : intensity) peak = std::max(peak, v);
  const double floor_v = 1e-9 * peak;
  std::vector<double> out(intensity.size());
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    const double v = std::max(intensity[i], floor_v);
    out[i] = -std::log(v / flat[i % flat.size()]);
  }
  return out;
}

inline std::vector<double> normalize(std::span<const double> intensity,
                                     double flat) {
  const double f[1] = {flat};
  return normalize(intensity, std::span<const double>(f, 1));
}

/// Beer-Lambert forward model, the inverse of normalize.
inline std::vector<double> simulate_intensity(std::span<const double> sino,
                                              double flat) {
  if (!(flat > 0.0)) throw InvalidFlatField("flat field must be > 0");
  std::vector<double> out(sino.size());
  for (std::size_t i = 0; i < sino.size(); ++i)
    out[i] = flat * std::exp(-sino[i]);
  return out;
}

// --------------------------------------------------------------- phantoms

struct Ellipse {
  double value, a, b, x0, y0, phi_deg;
};

/// Modified Shepp-Logan (higher contrast, values in [0, 1]).
inline const std::array<Ellipse, 10>& shepp_logan_ellipses() {
  static const std::array<Ellipse, 10> e = {{
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
      {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
      {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
      {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
  }};
  return e;
}

inline double shepp_logan_value(double x, double y) {
  double v = 0.0;
  for (const auto& e : shepp_logan_ellipses()) {
    const double t = e.phi_deg * std::numbers::pi / 180.0;
    const double dx = x - e.x0, dy = y - e.y0;
    const double xr = dx * std::cos(t) + dy * std::sin(t);
    const double yr = -dx * std::sin(t) + dy * std::cos(t);
    if ((xr / e.a) * (xr / e.a) + (yr / e.b) * (yr / e.b) <= 1.0) v += e.value;
  }
  return v;
}

/// One n x n slice, area-averaged over ss x ss subsamples. Row 0 is the top
/// (y = +1); pixel ix spans x in [ix - n/2, ix + 1 - n/2] / (n/2).
inline RealImage shepp_logan_slice(std::size_t n, int ss = 4) {
  RealImage img(n, n);
  const double h = n / 2.0;
  for (std::size_t iy = 0; iy < n; ++iy)
    for (std::size_t ix = 0; ix < n; ++ix) {
      double acc = 0.0;
      for (int ky = 0; ky < ss; ++ky)
        for (int kx = 0; kx < ss; ++kx) {
          const double x = (ix - h + (kx + 0.5) / ss) / h;
          const double y = -(iy - h + (ky + 0.5) / ss) / h;
          acc += shepp_logan_value(x, y);
        }
      img(iy, ix) = std::clamp(acc / (ss * ss), 0.0, 1.0);
    }
  return img;
}

/// n_z slices; intensity scale goes linearly 1.0 -> 0.8 across z.
inline std::vector<RealImage> phantom_shepp_logan(std::size_t n,
                                                  std::size_t n_z = 1,
                                                  int ss = 4) {
  if (n < 8) throw InvalidArgument("phantom size must be >= 8");
  if (n_z < 1) throw InvalidArgument("phantom needs at least one slice");
  const RealImage base = shepp_logan_slice(n, ss);
  std::vector<RealImage> out;
  for (std::size_t z = 0; z < n_z; ++z) {
    const double s =
        n_z == 1 ? 1.0 : 1.0 - 0.2 * static_cast<double>(z) / (n_z - 1);
    RealImage img = base;
    for (double& v : img.values()) v *= s;
    out.push_back(std::move(img));
  }
  return out;
}

/// Indicator of the disk |x - center| < radius in pixel units, center at
/// (n_x/2, n_y/2).
inline RealImage disk_phantom(std::size_t n_y, std::size_t n_x, double radius) {
  RealImage img(n_y, n_x);
  for (std::size_t iy = 0; iy < n_y; ++iy)
    for (std::size_t ix = 0; ix < n_x; ++ix) {
      const double x = ix - n_x / 2.0, y = iy - n_y / 2.0;
      img(iy, ix) = (x * x + y * y < radius * radius) ? 1.0 : 0.0;
    }
  return img;
}

// ---------------------------------------------------------------- metrics

/// 10 log10(|ref|^2 / |ref - s rec|^2) with s the least-squares scale.
/// +inf when the fit is exact.
inline double snr(std::span<const double> rec, std::span<const double> ref) {
  if (rec.size() != ref.size())
    throw ShapeMismatch("snr: images differ in size");
  double rr = 0.0, rf = 0.0, ff = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    rr += rec[i] * rec[i];
    rf += rec[i] * ref[i];
    ff += ref[i] * ref[i];
  }
  const double s = rr > 0.0 ? rf / rr : 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double d = ref[i] - s * rec[i];
    err += d * d;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ff / err);
}

inline double snr(const RealImage& rec, const RealImage& ref) {
  if (!rec.same_shape(ref.rows(), ref.cols()))
    throw ShapeMismatch("snr: images differ in shape");
  return snr(rec.span(), ref.span());
}

struct Metrics {
  double snr_db = 0.0;
  double residual = 0.0;
  bool exact() const { return std::isinf(snr_db); }
};

}  // namespace sptomo
