#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sptomo/core.hpp"
#include "sptomo/filters.hpp"
#include "sptomo/operators.hpp"

namespace sptomo {

/// Linear map from a domain vector (tomogram) to a range vector (sinogram).
template <class Op>
concept LinearOperator =
    requires(const Op& op, std::span<const cplx> in, std::span<cplx> out) {
      { op.domain_size() } -> std::convertible_to<std::size_t>;
      { op.range_size() } -> std::convertible_to<std::size_t>;
      op.apply(in, out);
      op.apply_adjoint(in, out);
    };

enum class Algorithm { FBP, SIRT, CGLS, TV };
enum class KrylovMethod { CGLS, CGS };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::FBP: return "fbp";
    case Algorithm::SIRT: return "sirt";
    case Algorithm::CGLS: return "cgls";
    case Algorithm::TV: return "tv";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  for (auto a : {Algorithm::FBP, Algorithm::SIRT, Algorithm::CGLS, Algorithm::TV})
    if (to_string(a) == s) return a;
  throw InvalidArgument("unknown algorithm '" + s + "'");
}

struct SolverConfig {
  Algorithm algorithm = Algorithm::SIRT;
  int max_iter = 10;
  double tol = 0.0;               // relative preconditioned residual
  std::optional<double> mu;       // TV data weight; default from the data
  int tv_inner_iter = 2;
  bool bb_enabled = true;
  FilterKind filter = FilterKind::Hamming;  // preconditioner D for iterative
  std::uint64_t seed = 0;
  KrylovMethod krylov = KrylovMethod::CGLS;
  bool nonnegative = false;       // SIRT projection
  double divergence_factor = 10.0;

  void validate() const {
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
    if (!(tol >= 0.0)) throw InvalidArgument("tol must be >= 0");
    if (mu && !(*mu > 0.0)) throw InvalidArgument("mu must be > 0");
    if (tv_inner_iter < 1) throw InvalidArgument("tv_inner_iter must be >= 1");
  }
};

struct SolverReport {
  Algorithm algorithm = Algorithm::FBP;
  RVec residual_history;  // ||P(b - A u_k)|| per iteration
  int iterations_run = 0;
  bool converged = false;
  bool breakdown = false;
  double wall_time = 0.0;  // seconds
};

struct SolveResult {
  CVec u;
  SolverReport report;
};

// Real and imaginary channels are independent real problems when the
// operator maps real vectors to real vectors. Every scalar is computed per
// channel so that solving a + ib equals solving a and b separately.
struct ChannelPair {
  double re = 0.0;
  double im = 0.0;
};

namespace detail {

inline ChannelPair cdot(std::span<const cplx> a, std::span<const cplx> b) {
  ChannelPair s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.re += a[i].real() * b[i].real();
    s.im += a[i].imag() * b[i].imag();
  }
  return s;
}

inline double total(ChannelPair p) { return p.re + p.im; }

inline constexpr double kRoundoff = 1e-16;
inline constexpr double kArmijo = 1e-4;
inline constexpr int kMaxBacktrack = 12;
inline constexpr std::size_t kNonmonotoneWindow = 10;

inline ChannelPair safe_div(ChannelPair n, ChannelPair d) {
  return {d.re != 0.0 ? n.re / d.re : 0.0, d.im != 0.0 ? n.im / d.im : 0.0};
}

inline cplx scaled(ChannelPair a, cplx x) {
  return {a.re * x.real(), a.im * x.imag()};
}

// y += a * x
inline void axpy(ChannelPair a, std::span<const cplx> x, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += scaled(a, x[i]);
}

// y = x + a * y
inline void xpay(std::span<const cplx> x, ChannelPair a, std::span<cplx> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + scaled(a, y[i]);
}

inline double norm(std::span<const cplx> x) {
  return std::sqrt(total(cdot(x, x)));
}

inline void check_finite(std::span<const cplx> x, const char* who) {
  for (const cplx& v : x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NonFiniteValue(std::string(who) + ": iterate has non-finite entries");
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// r = P(b - A u)
template <LinearOperator Op>
void residual(const Op& op, const Preconditioner& pre,
              std::span<const cplx> b, std::span<const cplx> u,
              std::span<cplx> r) {
  op.apply(u, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  precondition_inplace(pre, r);
}

// out = A^H P r
template <LinearOperator Op>
void gradient(const Op& op, const Preconditioner& pre,
              std::span<const cplx> r, std::span<cplx> out) {
  CVec tmp(r.begin(), r.end());
  precondition_inplace(pre, tmp);
  op.apply_adjoint(tmp, out);
}

template <LinearOperator Op>
void check_shapes(const Op& op, std::span<const cplx> b) {
  if (b.size() != op.range_size())
    throw ShapeMismatch("solver: data has " + std::to_string(b.size()) +
                        " samples, operator range is " +
                        std::to_string(op.range_size()));
}

}  // namespace detail

/// Isotropic shrinkage of the 2-vector v: max(|v| - kappa, 0) v/|v|.
inline std::pair<double, double> shrink(double vx, double vy, double kappa) {
  const double mag = std::hypot(vx, vy);
  if (mag <= kappa || mag == 0.0) return {0.0, 0.0};
  const double s = (mag - kappa) / mag;
  return {vx * s, vy * s};
}

/// Forward differences on an (n_y x n_x) image; the last row/column has
/// zero difference (reflective boundary). Output: [d/dx ; d/dy].
struct GradientOp {
  std::size_t n_y = 0, n_x = 0;

  std::size_t domain_size() const { return n_y * n_x; }
  std::size_t range_size() const { return 2 * n_y * n_x; }

  void apply(std::span<const cplx> u, std::span<cplx> g) const {
    const std::size_t n = n_y * n_x;
    for (std::size_t iy = 0; iy < n_y; ++iy)
      for (std::size_t ix = 0; ix < n_x; ++ix) {
        const std::size_t i = iy * n_x + ix;
        g[i] = ix + 1 < n_x ? u[i + 1] - u[i] : cplx{};
        g[n + i] = iy + 1 < n_y ? u[i + n_x] - u[i] : cplx{};
      }
  }
  void apply_adjoint(std::span<const cplx> g, std::span<cplx> u) const {
    const std::size_t n = n_y * n_x;
    std::fill(u.begin(), u.end(), cplx{});
    for (std::size_t iy = 0; iy < n_y; ++iy)
      for (std::size_t ix = 0; ix < n_x; ++ix) {
        const std::size_t i = iy * n_x + ix;
        if (ix + 1 < n_x) {
          u[i] -= g[i];
          u[i + 1] += g[i];
        }
        if (iy + 1 < n_y) {
          u[i] -= g[n + i];
          u[i + n_x] += g[n + i];
        }
      }
  }
};

// ------------------------------------------------------------------- FBP

inline SolveResult solve_fbp(std::span<const cplx> sino,
                             const TomoOperators& ops) {
  detail::Timer timer;
  detail::check_shapes(ops, sino);
  SolveResult res;
  res.u.resize(ops.domain_size());
  ops.apply_inverse(sino, res.u);
  CVec r(sino.size());
  detail::residual(ops, Preconditioner::identity(), sino, res.u, r);
  res.report.algorithm = Algorithm::FBP;
  res.report.residual_history = {detail::norm(r)};
  res.report.iterations_run = 1;
  res.report.converged = true;
  res.report.wall_time = timer.seconds();
  return res;
}

// ------------------------------------------------------------------ SIRT

/// Preconditioned gradient descent u += alpha A^H P^2 (b - A u), from 0.
/// The first step (and the fallback) is the exact line search step; with
/// bb_enabled later steps use BB1 on gradient differences.
template <LinearOperator Op>
SolveResult solve_sirt(std::span<const cplx> b, const Op& op,
                       const SolverConfig& cfg, const Preconditioner& pre) {
  cfg.validate();
  detail::check_shapes(op, b);
  detail::Timer timer;
  const std::size_t n = op.domain_size(), m = op.range_size();
  SolveResult res;
  res.report.algorithm = Algorithm::SIRT;
  CVec u(n), u_new(n), g(n), g_new(n), r(m), ag(m);

  CVec pb(b.begin(), b.end());
  precondition_inplace(pre, pb);
  const ChannelPair b_norm2 = detail::cdot(pb, pb);
  const double b_norm = std::sqrt(detail::total(b_norm2));

  detail::residual(op, pre, b, u, r);
  detail::gradient(op, pre, r, g);
  op.apply(g, ag);
  precondition_inplace(pre, ag);
  const ChannelPair alpha0 =
      detail::safe_div(detail::cdot(g, g), detail::cdot(ag, ag));
  ChannelPair alpha = alpha0;
  double best = std::numeric_limits<double>::infinity();
  // nonmonotone (GLL) acceptance for BB steps, per channel
  std::deque<ChannelPair> recent{detail::cdot(r, r)};

  for (int k = 0; k < cfg.max_iter; ++k) {
    const ChannelPair gg = detail::cdot(g, g);
    ChannelPair ref;
    for (const auto& f : recent) {
      ref.re = std::max(ref.re, f.re);
      ref.im = std::max(ref.im, f.im);
    }
    for (int tries = 0;; ++tries) {
      for (std::size_t i = 0; i < n; ++i) {
        u_new[i] = u[i] + detail::scaled(alpha, g[i]);
        if (cfg.nonnegative)
          u_new[i] = {std::max(u_new[i].real(), 0.0),
                      std::max(u_new[i].imag(), 0.0)};
      }
      detail::check_finite(u_new, "SIRT");
      detail::residual(op, pre, b, u_new, r);
      if (!cfg.bb_enabled || tries == detail::kMaxBacktrack) break;
      const ChannelPair f = detail::cdot(r, r);
      const auto accept = [](double fv, double rv, double a, double gv) {
        return fv <= rv - detail::kArmijo * a * gv + detail::kRoundoff * rv;
      };
      const bool ok_re = accept(f.re, ref.re, alpha.re, gg.re);
      const bool ok_im = accept(f.im, ref.im, alpha.im, gg.im);
      if (ok_re && ok_im) break;
      if (!ok_re) alpha.re *= 0.5;
      if (!ok_im) alpha.im *= 0.5;
    }
    recent.push_back(detail::cdot(r, r));
    if (recent.size() > detail::kNonmonotoneWindow) recent.pop_front();
    detail::gradient(op, pre, r, g_new);
    const double res_norm = detail::norm(r);
    res.report.residual_history.push_back(res_norm);
    res.report.iterations_run = k + 1;
    best = std::min(best, res_norm);
    if (res_norm > cfg.divergence_factor * best)
      throw DivergenceDetected("SIRT residual " + std::to_string(res_norm) +
                               " exceeds " +
                               std::to_string(cfg.divergence_factor) +
                               "x its minimum " + std::to_string(best));

    if (cfg.bb_enabled) {
      ChannelPair ss, sy;  // <du, du>, <du, -dg>
      for (std::size_t i = 0; i < n; ++i) {
        const cplx du = u_new[i] - u[i];
        const cplx dg = g_new[i] - g[i];
        ss.re += du.real() * du.real();
        ss.im += du.imag() * du.imag();
        sy.re -= du.real() * dg.real();
        sy.im -= du.imag() * dg.imag();
      }
      alpha.re = sy.re > 0.0 ? ss.re / sy.re : alpha0.re;
      alpha.im = sy.im > 0.0 ? ss.im / sy.im : alpha0.im;
    }
    u.swap(u_new);
    g.swap(g_new);
    if (res_norm <= cfg.tol * b_norm) {
      res.report.converged = true;
      break;
    }
  }
  res.u = std::move(u);
  res.report.wall_time = timer.seconds();
  return res;
}

// ------------------------------------------------------------------ CGLS

namespace detail {

// CGLS on min ||P(b - A x)||, warm start allowed. Returns false on breakdown.
template <LinearOperator Op>
bool cgls_iterate(const Op& op, const Preconditioner& pre,
                  std::span<const cplx> b, std::span<cplx> x, int iters,
                  double tol, SolverReport& rep, bool record) {
  const std::size_t n = op.domain_size(), m = op.range_size();
  CVec r(m), s(n), p(n), q(m);
  residual(op, pre, b, x, r);
  gradient(op, pre, r, s);
  p = s;
  ChannelPair gamma = cdot(s, s);
  // Below this the recursive residual is rounding noise; iterating on would
  // amplify it, so the channel is frozen (gamma = 0 gives alpha = beta = 0).
  const ChannelPair floor{kRoundoff * kRoundoff * gamma.re,
                          kRoundoff * kRoundoff * gamma.im};
  CVec pb(b.begin(), b.end());
  precondition_inplace(pre, pb);
  const double b_norm = norm(pb);
  for (int k = 0; k < iters; ++k) {
    if (total(gamma) == 0.0) {
      rep.converged = true;
      return true;
    }
    op.apply(p, q);
    precondition_inplace(pre, q);
    const ChannelPair delta = cdot(q, q);
    // A channel with gamma = 0 is solved and keeps alpha = 0.
    const bool broke =
        (gamma.re > 0.0 && !(delta.re > std::numeric_limits<double>::min())) ||
        (gamma.im > 0.0 && !(delta.im > std::numeric_limits<double>::min()));
    if (broke) {
      rep.breakdown = true;
      rep.converged = false;
      return false;
    }
    const ChannelPair alpha = safe_div(gamma, delta);
    axpy(alpha, p, x);
    axpy({-alpha.re, -alpha.im}, q, r);
    gradient(op, pre, r, s);
    ChannelPair gamma_new = cdot(s, s);
    if (gamma_new.re <= floor.re) gamma_new.re = 0.0;
    if (gamma_new.im <= floor.im) gamma_new.im = 0.0;
    xpay(s, safe_div(gamma_new, gamma), p);
    gamma = gamma_new;
    check_finite(x, "CGLS");
    if (record) {
      const double rn = norm(r);
      rep.residual_history.push_back(rn);
      rep.iterations_run += 1;
      if (rn <= tol * b_norm) {
        rep.converged = true;
        return true;
      }
    }
  }
  return true;
}

// Sonneveld's CGS on the normal equations A^H P^2 A x = A^H P^2 b.
template <LinearOperator Op>
void cgs_iterate(const Op& op, const Preconditioner& pre,
                 std::span<const cplx> b, std::span<cplx> x, int iters,
                 double tol, SolverReport& rep) {
  const std::size_t n = op.domain_size(), m = op.range_size();
  CVec tmp_m(m), r(n), v(n), q(n), uq(n), nuq(n), res(m);
  auto normal = [&](std::span<const cplx> in, std::span<cplx> out) {
    op.apply(in, tmp_m);
    precondition_inplace(pre, tmp_m);
    gradient(op, pre, tmp_m, out);
  };
  residual(op, pre, b, x, res);
  gradient(op, pre, res, r);  // r = c - N x
  const CVec r_tilde = r;
  CVec u = r, p = r;
  ChannelPair rho = cdot(r_tilde, r);
  const ChannelPair rr0 = cdot(r, r);
  bool frozen_re = !(rr0.re > 0.0), frozen_im = !(rr0.im > 0.0);
  CVec pb(b.begin(), b.end());
  precondition_inplace(pre, pb);
  const double b_norm = norm(pb);
  for (int k = 0; k < iters; ++k) {
    if (frozen_re && frozen_im) {
      rep.converged = true;
      return;
    }
    if (frozen_re) rho.re = 0.0;
    if (frozen_im) rho.im = 0.0;
    normal(p, v);
    const ChannelPair sigma = cdot(r_tilde, v);
    if ((!frozen_re && (rho.re == 0.0 || sigma.re == 0.0)) ||
        (!frozen_im && (rho.im == 0.0 || sigma.im == 0.0))) {
      rep.breakdown = true;
      rep.converged = false;
      return;
    }
    const ChannelPair alpha = safe_div(rho, sigma);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = u[i] - scaled(alpha, v[i]);
      uq[i] = u[i] + q[i];
    }
    axpy(alpha, uq, x);
    normal(uq, nuq);
    axpy({-alpha.re, -alpha.im}, nuq, r);
    ChannelPair rho_new = cdot(r_tilde, r);
    const ChannelPair rr = cdot(r, r);
    frozen_re = frozen_re || rr.re <= kRoundoff * kRoundoff * rr0.re;
    frozen_im = frozen_im || rr.im <= kRoundoff * kRoundoff * rr0.im;
    if (frozen_re) rho_new.re = 0.0;
    if (frozen_im) rho_new.im = 0.0;
    const ChannelPair beta = safe_div(rho_new, rho);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = r[i] + scaled(beta, q[i]);
      p[i] = u[i] + scaled(beta, q[i] + scaled(beta, p[i]));
    }
    rho = rho_new;
    check_finite(x, "CGS");
    residual(op, pre, b, x, res);
    const double rn = norm(res);
    rep.residual_history.push_back(rn);
    rep.iterations_run += 1;
    if (rn <= tol * b_norm) {
      rep.converged = true;
      return;
    }
  }
}

}  // namespace detail

template <LinearOperator Op>
SolveResult solve_cgls(std::span<const cplx> b, const Op& op,
                       const SolverConfig& cfg, const Preconditioner& pre) {
  cfg.validate();
  detail::check_shapes(op, b);
  detail::Timer timer;
  SolveResult res;
  res.report.algorithm = Algorithm::CGLS;
  res.u.assign(op.domain_size(), cplx{});
  if (cfg.krylov == KrylovMethod::CGS)
    detail::cgs_iterate(op, pre, b, res.u, cfg.max_iter, cfg.tol, res.report);
  else
    detail::cgls_iterate(op, pre, b, res.u, cfg.max_iter, cfg.tol, res.report,
                         true);
  res.report.wall_time = timer.seconds();
  return res;
}

// -------------------------------------------------------------------- TV

namespace detail {

// [P A ; w grad] stacked, with the preconditioner folded into apply.
template <LinearOperator Op>
struct AugmentedOp {
  const Op& op;
  const Preconditioner& pre;
  GradientOp grad;
  double weight;

  std::size_t domain_size() const { return op.domain_size(); }
  std::size_t range_size() const { return op.range_size() + grad.range_size(); }

  void apply(std::span<const cplx> u, std::span<cplx> out) const {
    auto top = out.first(op.range_size());
    op.apply(u, top);
    precondition_inplace(pre, top);
    auto bottom = out.subspan(op.range_size());
    grad.apply(u, bottom);
    for (auto& v : bottom) v *= weight;
  }
  void apply_adjoint(std::span<const cplx> y, std::span<cplx> u) const {
    CVec top(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(op.range_size()));
    precondition_inplace(pre, top);
    op.apply_adjoint(top, u);
    CVec gu(u.size());
    grad.apply_adjoint(y.subspan(op.range_size()), gu);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += weight * gu[i];
  }
};

}  // namespace detail

/// Default data weight: 0.1 max |A^H b| per channel.
template <LinearOperator Op>
ChannelPair default_tv_mu(std::span<const cplx> b, const Op& op) {
  CVec atb(op.domain_size());
  op.apply_adjoint(b, atb);
  ChannelPair mx;
  for (const cplx& v : atb) {
    mx.re = std::max(mx.re, std::abs(v.real()));
    mx.im = std::max(mx.im, std::abs(v.imag()));
  }
  return {0.1 * mx.re, 0.1 * mx.im};
}

/// Split-Bregman TV: mu/2 ||P(Au - b)||^2 + |grad u|_1, lambda = 2 mu.
/// `n_y, n_x` give the image shape of the domain.
template <LinearOperator Op>
SolveResult solve_tv(std::span<const cplx> b, const Op& op,
                     const SolverConfig& cfg, const Preconditioner& pre,
                     std::size_t n_y, std::size_t n_x) {
  cfg.validate();
  detail::check_shapes(op, b);
  if (n_y * n_x != op.domain_size())
    throw ShapeMismatch("solve_tv: image shape does not match operator domain");
  detail::Timer timer;
  const std::size_t n = op.domain_size(), m = op.range_size();
  ChannelPair mu = cfg.mu ? ChannelPair{*cfg.mu, *cfg.mu} : default_tv_mu(b, op);
  // A channel with no data has mu = 0; give it any positive value, its
  // iterates stay zero.
  if (!(mu.re > 0.0)) mu.re = 1.0;
  if (!(mu.im > 0.0)) mu.im = 1.0;
  const ChannelPair lambda{2.0 * mu.re, 2.0 * mu.im};
  const double weight = std::sqrt(2.0);  // sqrt(lambda / mu)

  detail::AugmentedOp<Op> aug{op, pre, GradientOp{n_y, n_x}, weight};
  SolveResult res;
  res.report.algorithm = Algorithm::TV;
  res.u.assign(n, cplx{});
  CVec d(2 * n), bb(2 * n), gu(2 * n), rhs(m + 2 * n), r(m);
  CVec pb(b.begin(), b.end());
  precondition_inplace(pre, pb);
  std::copy(pb.begin(), pb.end(), rhs.begin());
  const double b_norm = detail::norm(pb);

  for (int k = 0; k < cfg.max_iter; ++k) {
    for (std::size_t i = 0; i < 2 * n; ++i) rhs[m + i] = weight * (d[i] - bb[i]);
    SolverReport inner;
    detail::cgls_iterate(aug, Preconditioner::identity(), rhs, res.u,
                         cfg.tv_inner_iter, 0.0, inner, false);
    detail::check_finite(res.u, "TV");
    aug.grad.apply(res.u, gu);
    for (std::size_t i = 0; i < n; ++i) {
      const cplx vx = gu[i] + bb[i], vy = gu[n + i] + bb[n + i];
      const auto [rx, ry] = shrink(vx.real(), vy.real(), 1.0 / lambda.re);
      const auto [ix, iy] = shrink(vx.imag(), vy.imag(), 1.0 / lambda.im);
      d[i] = {rx, ix};
      d[n + i] = {ry, iy};
    }
    for (std::size_t i = 0; i < 2 * n; ++i) bb[i] += gu[i] - d[i];
    detail::residual(op, pre, b, res.u, r);
    const double rn = detail::norm(r);
    res.report.residual_history.push_back(rn);
    res.report.iterations_run = k + 1;
    if (rn <= cfg.tol * b_norm) {
      res.report.converged = true;
      break;
    }
  }
  res.report.wall_time = timer.seconds();
  return res;
}

// ------------------------------------------------------- TomoOperators API

inline Preconditioner make_preconditioner(const SolverConfig& cfg,
                                          const ScanGeometry& geom) {
  if (cfg.filter == FilterKind::Density)
    throw InvalidArgument("density weights cannot serve as a preconditioner");
  return Preconditioner::make(cfg.filter, geom);
}

/// Runs cfg.algorithm on one (possibly paired) slice.
inline SolveResult solve(std::span<const cplx> sino, const TomoOperators& ops,
                         const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::FBP:
      return solve_fbp(sino, ops);
    case Algorithm::SIRT:
      return solve_sirt(sino, ops, cfg, make_preconditioner(cfg, ops.geom));
    case Algorithm::CGLS:
      return solve_cgls(sino, ops, cfg, make_preconditioner(cfg, ops.geom));
    case Algorithm::TV:
      return solve_tv(sino, ops, cfg, make_preconditioner(cfg, ops.geom),
                      ops.geom.n_y, ops.geom.n_x);
  }
  throw InvalidArgument("unknown algorithm");
}

inline std::pair<Tomogram, SolverReport> solve(const Sinogram& sino,
                                               const TomoOperators& ops,
                                               const SolverConfig& cfg) {
  if (!sino.same_shape(ops.geom.n_theta, ops.geom.n_p))
    throw ShapeMismatch("sinogram shape does not match geometry");
  auto res = solve(sino.span(), ops, cfg);
  return {Tomogram(ops.geom.n_y, ops.geom.n_x, std::move(res.u)),
          std::move(res.report)};
}

}  // namespace sptomo
