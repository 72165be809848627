#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "sptomo/core.hpp"
#include "sptomo/filters.hpp"
#include "sptomo/geometry.hpp"
#include "sptomo/kernel.hpp"
#include "sptomo/sparse.hpp"

namespace sptomo {

struct DensityFilterResult {
  FilterSpec filter;
  RVec residual_history;         // ||S D_v - 1|| after each iteration
  double initial_residual = 0.0;  // at the scaled RamLak start
  double ramlak_residual = 0.0;   // best-scaled RamLak weights
  double ones_residual = 0.0;     // all-ones weights
  bool converged = false;         // false: NoConvergence, best iterate kept
  int iterations = 0;
};

namespace detail {

// Real magnitude matrix |S| restricted to the target rows.
struct RealCsr {
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  RVec vals;

  std::size_t n_rows() const { return row_ptr.size() - 1; }

  RVec mul(const RVec& x) const {
    RVec y(n_rows(), 0.0);
    for (std::size_t r = 0; r < n_rows(); ++r)
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        y[r] += vals[k] * x[col_idx[k]];
    return y;
  }
  RVec mul_t(const RVec& y) const {
    RVec x(n_cols, 0.0);
    for (std::size_t r = 0; r < n_rows(); ++r)
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        x[col_idx[k]] += vals[k] * y[r];
    return x;
  }
};

inline double dot(const RVec& a, const RVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double residual_norm(const RealCsr& s, const RVec& x) {
  RVec r = s.mul(x);
  double acc = 0.0;
  for (double v : r) acc += (1.0 - v) * (1.0 - v);
  return std::sqrt(acc);
}

}  // namespace detail

/// Least-squares density weights argmin ||S D_v - 1|| subject to D_v >= 0.
///
/// Only grid points inside the disk |k| <= min(n)/2 - k_w/2 are targeted; the
/// corners beyond it are not covered by any polar sample. Bound-truncated
/// CGLS: when a step would make a weight negative it stops at the bound,
/// fixes that weight at 0 and restarts, so the residual never increases.
inline DensityFilterResult density_filter_solve(const SparseGridCSR& csr,
                                                const ScanGeometry& geom,
                                                const KernelSpec& spec,
                                                int max_iter = 50,
                                                double tol = 1e-6) {
  if (csr.n_rows() != geom.tomogram_size() ||
      csr.n_cols() != geom.sinogram_size())
    throw ShapeMismatch("density_filter_solve: matrix does not match geometry");

  const double radius =
      static_cast<double>(std::min(geom.n_x, geom.n_y)) / 2.0 - spec.width / 2.0;
  detail::RealCsr s;
  s.n_cols = csr.n_cols();
  for (std::size_t r = 0; r < csr.n_rows(); ++r) {
    const double kx = static_cast<double>(r / geom.n_y) - geom.n_x / 2.0;
    const double ky = static_cast<double>(r % geom.n_y) - geom.n_y / 2.0;
    if (std::hypot(kx, ky) > radius) continue;
    for (auto k = csr.matrix.row_ptr[r]; k < csr.matrix.row_ptr[r + 1]; ++k) {
      s.col_idx.push_back(csr.matrix.col_idx[k]);
      s.vals.push_back(std::abs(csr.matrix.vals[k]));
    }
    s.row_ptr.push_back(s.col_idx.size());
  }
  const std::size_t m = s.n_rows(), n = s.n_cols;

  DensityFilterResult res;
  res.filter.kind = FilterKind::Density;

  RVec ram = make_filter(FilterKind::RamLak, geom).weights;
  RVec q = s.mul(ram);
  const double qq = detail::dot(q, q);
  double scale = 0.0;
  if (qq > 0.0) {
    for (double v : q) scale += v;
    scale /= qq;
  }
  for (double& v : ram) v *= scale;
  res.ramlak_residual = detail::residual_norm(s, ram);
  res.ones_residual = detail::residual_norm(s, RVec(n, 1.0));

  RVec x = ram;
  res.initial_residual = res.ramlak_residual;
  std::vector<char> free_var(n, 1);
  RVec r(m), z(n), p(n), w(m);
  double gamma = 0.0, gamma0 = -1.0;
  bool restart = true;

  auto masked_gradient = [&] {
    z = s.mul_t(r);
    for (std::size_t i = 0; i < n; ++i)
      if (!free_var[i]) z[i] = 0.0;
  };

  for (int it = 0; it < max_iter; ++it) {
    if (restart) {
      RVec sx = s.mul(x);
      for (std::size_t i = 0; i < m; ++i) r[i] = 1.0 - sx[i];
      masked_gradient();
      p = z;
      gamma = detail::dot(z, z);
      if (gamma0 < 0.0) gamma0 = gamma;
      restart = false;
    }
    if (gamma <= tol * tol * gamma0 || gamma <= 1e-300) {
      res.converged = true;
      break;
    }
    w = s.mul(p);
    const double ww = detail::dot(w, w);
    if (ww <= 0.0) {
      res.converged = true;
      break;
    }
    const double alpha = gamma / ww;
    double alpha_max = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (p[i] < 0.0) alpha_max = std::min(alpha_max, -x[i] / p[i]);
    res.iterations = it + 1;
    if (alpha_max < alpha) {
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha_max * p[i];
        if (p[i] < 0.0 && x[i] <= 1e-15) {
          x[i] = 0.0;
          free_var[i] = 0;
        }
      }
      res.residual_history.push_back(detail::residual_norm(s, x));
      restart = true;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < m; ++i) r[i] -= alpha * w[i];
    masked_gradient();
    const double gamma_new = detail::dot(z, z);
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + gamma_new / gamma * p[i];
    gamma = gamma_new;
    res.residual_history.push_back(std::sqrt(detail::dot(r, r)));
  }

  for (double& v : x) v = std::max(v, 0.0);
  res.filter.weights = std::move(x);
  return res;
}

}  // namespace sptomo
