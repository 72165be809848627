#pragma once

// Slow direct-space references, used by the tests only.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "sptomo/core.hpp"
#include "sptomo/geometry.hpp"

namespace sptomo::oracle {

inline constexpr std::size_t kMaxDirectGrid = 128;
inline constexpr std::size_t kMaxDenseGrid = 16;

/// Bilinear sample of u at continuous pixel position (x, y) = (ix, iy);
/// zero outside the grid.
inline double bilinear(const RealImage& u, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
  const double ax = x - fx, ay = y - fy;
  auto at = [&](long iy, long ix) -> double {
    if (ix < 0 || iy < 0 || ix >= static_cast<long>(u.cols()) ||
        iy >= static_cast<long>(u.rows()))
      return 0.0;
    return u(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
  };
  return (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) +
         ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
}

/// Line integrals P(theta, p) = sum_s u(p cos - s sin, p sin + s cos) with
/// unit steps in s; p = j - center.
inline RealImage direct_radon(const RealImage& u, const ScanGeometry& g) {
  g.validate();
  if (g.n_x > kMaxDirectGrid || g.n_y > kMaxDirectGrid)
    throw GridTooLarge("direct_radon is limited to " +
                       std::to_string(kMaxDirectGrid) + " pixels per side");
  if (!u.same_shape(g.n_y, g.n_x))
    throw ShapeMismatch("direct_radon: tomogram shape does not match geometry");
  const double cx = g.n_x / 2.0, cy = g.n_y / 2.0;
  const long reach = static_cast<long>(
      std::ceil(std::hypot(cx, cy)) + 1.0);  // covers the whole grid
  RealImage out(g.n_theta, g.n_p);
  for (std::size_t t = 0; t < g.n_theta; ++t) {
    const double c = std::cos(g.angles[t]), s = std::sin(g.angles[t]);
    for (std::size_t j = 0; j < g.n_p; ++j) {
      const double p = static_cast<double>(j) - g.center;
      double acc = 0.0;
      for (long k = -reach; k <= reach; ++k) {
        const double sv = static_cast<double>(k);
        acc += bilinear(u, p * c - sv * s + cx, p * s + sv * c + cy);
      }
      out(t, j) = acc;
    }
  }
  return out;
}

/// Explicit ray-sum matrix A (n_theta*n_p x n_x*n_y), column k is
/// direct_radon of the k-th unit pixel.
struct DenseOperator {
  ScanGeometry geom;
  Eigen::MatrixXd matrix;

  explicit DenseOperator(const ScanGeometry& g) : geom(g) {
    if (g.n_x > kMaxDenseGrid || g.n_y > kMaxDenseGrid)
      throw GridTooLarge("DenseOperator is limited to " +
                         std::to_string(kMaxDenseGrid) + " pixels per side");
    matrix.resize(static_cast<Eigen::Index>(g.sinogram_size()),
                  static_cast<Eigen::Index>(g.tomogram_size()));
    RealImage e(g.n_y, g.n_x);
    for (std::size_t k = 0; k < g.tomogram_size(); ++k) {
      e[k] = 1.0;
      const RealImage col = direct_radon(e, g);
      for (std::size_t i = 0; i < col.size(); ++i)
        matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            col[i];
      e[k] = 0.0;
    }
  }

  std::size_t domain_size() const { return geom.tomogram_size(); }
  std::size_t range_size() const { return geom.sinogram_size(); }

  // A is real, so it acts on real and imaginary parts independently.
  void apply(std::span<const cplx> u, std::span<cplx> s) const {
    mul(matrix, u, s);
  }
  void apply_adjoint(std::span<const cplx> s, std::span<cplx> u) const {
    mul(matrix.transpose(), s, u);
  }

 private:
  template <class M>
  static void mul(const M& a, std::span<const cplx> x, std::span<cplx> y) {
    if (x.size() != static_cast<std::size_t>(a.cols()) ||
        y.size() != static_cast<std::size_t>(a.rows()))
      throw ShapeMismatch("DenseOperator: vector length mismatch");
    Eigen::Map<const Eigen::VectorXcd> xv(x.data(), a.cols());
    Eigen::Map<Eigen::VectorXcd> yv(y.data(), a.rows());
    yv = a.template cast<cplx>() * xv;
  }
};

/// (A^T A + eps I) x = A^T b, eps = 1e-10 trace(A^T A) / M, by Cholesky.
inline RealImage dense_lsq_solve(const RealImage& sino, const ScanGeometry& g) {
  if (!sino.same_shape(g.n_theta, g.n_p))
    throw ShapeMismatch("dense_lsq_solve: sinogram shape does not match geometry");
  const DenseOperator op(g);
  const Eigen::MatrixXd& a = op.matrix;
  Eigen::MatrixXd ata = a.transpose() * a;
  const double eps = 1e-10 * ata.trace() / static_cast<double>(ata.rows());
  ata.diagonal().array() += eps;
  Eigen::Map<const Eigen::VectorXd> b(sino.values().data(), a.rows());
  const Eigen::VectorXd x = ata.llt().solve(a.transpose() * b);
  RealImage out(g.n_y, g.n_x);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = x(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace sptomo::oracle
