#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <vector>

#include "sptomo/core.hpp"

namespace testing {

using sptomo::cplx;
using sptomo::CVec;

inline double rel_err(std::span<const cplx> a, std::span<const cplx> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double rel_err(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  cplx acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

inline double l2(std::span<const cplx> a) {
  double s = 0.0;
  for (const cplx& v : a) s += std::norm(v);
  return std::sqrt(s);
}

inline CVec random_complex(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(n);
  for (auto& x : v) x = {nd(rng), nd(rng)};
  return v;
}

inline CVec random_real(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVec v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

inline CVec as_complex(std::span<const double> x) { return CVec(x.begin(), x.end()); }

}  // namespace testing
