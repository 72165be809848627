#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <tuple>

#include "sptomo/core.hpp"

namespace sptomo::fft {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are cached per thread and created under a global lock.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

namespace detail {

enum class Kind { Rows, Grid2Fwd, Grid2Inv };

struct PlanCache {
  std::map<std::tuple<Kind, std::size_t, std::size_t, int>, fftw_plan> plans;
  ~PlanCache() {
    std::lock_guard lock(planner_mutex());
    for (auto& [k, p] : plans) fftw_destroy_plan(p);
  }
};

inline fftw_complex* as_fftw(cplx* p) {
  return reinterpret_cast<fftw_complex*>(p);
}

inline fftw_plan make_plan(Kind kind, std::size_t a, std::size_t b, int sign) {
  const int ia = static_cast<int>(a), ib = static_cast<int>(b);
  // FFTW_ESTIMATE never touches the arrays; they only fix in-place vs not.
  CVec in(a * b), out(a * b);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  fftw_plan plan = nullptr;
  switch (kind) {
    case Kind::Rows: {  // a rows of length b, in place
      fftw_iodim dim{ib, 1, 1};
      fftw_iodim batch{ia, ib, ib};
      plan = fftw_plan_guru_dft(1, &dim, 1, &batch, as_fftw(in.data()),
                                as_fftw(in.data()), sign, flags);
      break;
    }
    case Kind::Grid2Fwd: {  // (n_y=a x n_x=b) image -> (n_x x n_y) grid
      fftw_iodim dims[2] = {{ib, 1, ia}, {ia, ib, 1}};
      plan = fftw_plan_guru_dft(2, dims, 0, nullptr, as_fftw(in.data()),
                                as_fftw(out.data()), sign, flags);
      break;
    }
    case Kind::Grid2Inv: {  // (n_x x n_y) grid -> (n_y=a x n_x=b) image
      fftw_iodim dims[2] = {{ib, ia, 1}, {ia, 1, ib}};
      plan = fftw_plan_guru_dft(2, dims, 0, nullptr, as_fftw(in.data()),
                                as_fftw(out.data()), sign, flags);
      break;
    }
  }
  if (!plan) throw Error("FFTW failed to create a plan");
  return plan;
}

inline fftw_plan get_plan(Kind kind, std::size_t a, std::size_t b, int sign) {
  thread_local PlanCache cache;
  const auto key = std::make_tuple(kind, a, b, sign);
  auto it = cache.plans.find(key);
  if (it != cache.plans.end()) return it->second;
  fftw_plan p = make_plan(kind, a, b, sign);
  cache.plans.emplace(key, p);
  return p;
}

inline void scale(std::span<cplx> x, double s) {
  for (auto& v : x) v *= s;
}

}  // namespace detail

/// Unitary 1D transform of each row of a (rows x cols) row-major block, in
/// place. `inverse` selects the +i exponent.
inline void rows(std::span<cplx> data, std::size_t n_rows, std::size_t n_cols,
                 bool inverse) {
  if (data.size() != n_rows * n_cols)
    throw ShapeMismatch("fft rows: buffer size does not match shape");
  if (data.empty()) return;
  fftw_plan p = detail::get_plan(detail::Kind::Rows, n_rows, n_cols,
                                 inverse ? FFTW_BACKWARD : FFTW_FORWARD);
  fftw_execute_dft(p, detail::as_fftw(data.data()),
                   detail::as_fftw(data.data()));
  detail::scale(data, 1.0 / std::sqrt(static_cast<double>(n_cols)));
}

/// Unitary forward 2D transform of an (n_y x n_x) image, written to the
/// Fourier grid in (n_x x n_y) order, i.e. index gx * n_y + gy.
inline void forward_2d(std::span<const cplx> image, std::span<cplx> grid,
                       std::size_t n_y, std::size_t n_x) {
  if (image.size() != n_y * n_x || grid.size() != n_y * n_x)
    throw ShapeMismatch("fft forward_2d: buffer size does not match shape");
  fftw_plan p = detail::get_plan(detail::Kind::Grid2Fwd, n_y, n_x, FFTW_FORWARD);
  // Out-of-place guru plans leave the input untouched.
  fftw_execute_dft(p, detail::as_fftw(const_cast<cplx*>(image.data())),
                   detail::as_fftw(grid.data()));
  detail::scale(grid, 1.0 / std::sqrt(static_cast<double>(n_y * n_x)));
}

/// Inverse of forward_2d.
inline void inverse_2d(std::span<const cplx> grid, std::span<cplx> image,
                       std::size_t n_y, std::size_t n_x) {
  if (image.size() != n_y * n_x || grid.size() != n_y * n_x)
    throw ShapeMismatch("fft inverse_2d: buffer size does not match shape");
  fftw_plan p =
      detail::get_plan(detail::Kind::Grid2Inv, n_y, n_x, FFTW_BACKWARD);
  fftw_execute_dft(p, detail::as_fftw(const_cast<cplx*>(grid.data())),
                   detail::as_fftw(image.data()));
  detail::scale(image, 1.0 / std::sqrt(static_cast<double>(n_y * n_x)));
}

}  // namespace sptomo::fft
