#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sptomo/core.hpp"

namespace sptomo {

/// Coordinate-list matrix. A negative row marks an entry that fell outside
/// the valid grid band; prune() drops it.
struct SparseCOO {
  std::size_t n_rows = 0;  // M
  std::size_t n_cols = 0;  // N
  std::vector<std::int64_t> rows;
  std::vector<std::int64_t> cols;
  CVec vals;

  std::size_t nnz() const noexcept { return vals.size(); }

  void push(std::int64_t r, std::int64_t c, cplx v) {
    rows.push_back(r);
    cols.push_back(c);
    vals.push_back(v);
  }
};

inline constexpr std::int64_t kOutOfBand = -1;

/// Drops sentinel/out-of-range rows and entries with |val| <= threshold.
inline SparseCOO prune(const SparseCOO& coo, double threshold = 0.0) {
  SparseCOO out;
  out.n_rows = coo.n_rows;
  out.n_cols = coo.n_cols;
  const auto m = static_cast<std::int64_t>(coo.n_rows);
  const auto n = static_cast<std::int64_t>(coo.n_cols);
  for (std::size_t k = 0; k < coo.nnz(); ++k) {
    if (coo.rows[k] < 0 || coo.rows[k] >= m) continue;
    if (coo.cols[k] < 0 || coo.cols[k] >= n) continue;
    if (std::abs(coo.vals[k]) <= threshold) continue;
    out.push(coo.rows[k], coo.cols[k], coo.vals[k]);
  }
  return out;
}

/// Canonical CSR: row_ptr[0] = 0, row_ptr[M] = nnz, strictly increasing
/// columns within a row.
struct CsrMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::uint64_t> row_ptr;
  std::vector<std::uint64_t> col_idx;
  CVec vals;

  std::size_t nnz() const noexcept { return vals.size(); }

  void apply_into(std::span<const cplx> x, std::span<cplx> y) const {
    if (x.size() != n_cols || y.size() != n_rows)
      throw ShapeMismatch("spmv: matrix is " + std::to_string(n_rows) + "x" +
                          std::to_string(n_cols) + ", x has " +
                          std::to_string(x.size()) + ", y has " +
                          std::to_string(y.size()));
    for (std::size_t r = 0; r < n_rows; ++r) {
      cplx acc{};
      for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
        acc += vals[k] * x[col_idx[k]];
      y[r] = acc;
    }
  }

  CVec apply(std::span<const cplx> x) const {
    CVec y(n_rows);
    apply_into(x, y);
    return y;
  }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

/// Conjugate transpose, built directly in canonical CSR form.
inline CsrMatrix conjugate_transpose(const CsrMatrix& a) {
  CsrMatrix t;
  t.n_rows = a.n_cols;
  t.n_cols = a.n_rows;
  t.row_ptr.assign(t.n_rows + 1, 0);
  for (std::uint64_t c : a.col_idx) ++t.row_ptr[c + 1];
  std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
  t.col_idx.resize(a.nnz());
  t.vals.resize(a.nnz());
  std::vector<std::uint64_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows of `a` are visited in order, so each transposed row receives
  // strictly increasing column indices.
  for (std::size_t r = 0; r < a.n_rows; ++r)
    for (std::uint64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const std::uint64_t dst = cursor[a.col_idx[k]]++;
      t.col_idx[dst] = r;
      t.vals[dst] = std::conj(a.vals[k]);
    }
  return t;
}

/// The interpolation matrix S (M x N) and its separately stored conjugate
/// transpose S^H (N x M).
struct SparseGridCSR {
  CsrMatrix matrix;
  CsrMatrix adjoint;

  std::size_t n_rows() const noexcept { return matrix.n_rows; }
  std::size_t n_cols() const noexcept { return matrix.n_cols; }
  std::size_t nnz() const noexcept { return matrix.nnz(); }

  friend bool operator==(const SparseGridCSR&, const SparseGridCSR&) = default;
};

/// Sorts by (row, col), sums duplicates, and materializes the transpose.
/// Duplicates are summed in their original COO order, so the result is
/// deterministic.
inline SparseGridCSR coo_to_csr(const SparseCOO& coo) {
  CsrMatrix a;
  a.n_rows = coo.n_rows;
  a.n_cols = coo.n_cols;
  a.row_ptr.assign(coo.n_rows + 1, 0);
  for (std::size_t k = 0; k < coo.nnz(); ++k) {
    if (coo.rows[k] < 0 || static_cast<std::size_t>(coo.rows[k]) >= coo.n_rows ||
        coo.cols[k] < 0 || static_cast<std::size_t>(coo.cols[k]) >= coo.n_cols)
      throw ShapeMismatch("coo_to_csr: entry " + std::to_string(k) +
                          " out of bounds; prune first");
    ++a.row_ptr[static_cast<std::size_t>(coo.rows[k]) + 1];
  }
  std::partial_sum(a.row_ptr.begin(), a.row_ptr.end(), a.row_ptr.begin());

  // Bucket by row (stable), then stable-sort each bucket by column.
  std::vector<std::size_t> order(coo.nnz());
  {
    std::vector<std::uint64_t> cursor(a.row_ptr.begin(), a.row_ptr.end() - 1);
    for (std::size_t k = 0; k < coo.nnz(); ++k)
      order[cursor[static_cast<std::size_t>(coo.rows[k])]++] = k;
  }
  a.row_ptr.assign(coo.n_rows + 1, 0);
  for (std::size_t r = 0, begin = 0; r < coo.n_rows; ++r) {
    std::size_t end = begin;
    while (end < order.size() &&
           static_cast<std::size_t>(coo.rows[order[end]]) == r)
      ++end;
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t i, std::size_t j) {
                       return coo.cols[i] < coo.cols[j];
                     });
    for (std::size_t k = begin; k < end; ++k) {
      const auto c = static_cast<std::uint64_t>(coo.cols[order[k]]);
      if (k > begin && a.col_idx.back() == c) {
        a.vals.back() += coo.vals[order[k]];
      } else {
        a.col_idx.push_back(c);
        a.vals.push_back(coo.vals[order[k]]);
      }
    }
    a.row_ptr[r + 1] = a.col_idx.size();
    begin = end;
  }

  SparseGridCSR out;
  out.adjoint = conjugate_transpose(a);
  out.matrix = std::move(a);
  return out;
}

inline CVec spmv(const CsrMatrix& a, std::span<const cplx> x) {
  return a.apply(x);
}

/// Y = A X for a row-major X with n_rhs columns; each column is independent.
inline CVec spmm(const CsrMatrix& a, std::span<const cplx> x,
                 std::size_t n_rhs) {
  if (n_rhs == 0 || x.size() != a.n_cols * n_rhs)
    throw ShapeMismatch("spmm: X has " + std::to_string(x.size()) +
                        " elements, expected " +
                        std::to_string(a.n_cols) + " x " +
                        std::to_string(n_rhs));
  CVec y(a.n_rows * n_rhs);
  for (std::size_t r = 0; r < a.n_rows; ++r) {
    cplx* out = y.data() + r * n_rhs;
    for (std::uint64_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
      const cplx v = a.vals[k];
      const cplx* in = x.data() + a.col_idx[k] * n_rhs;
      for (std::size_t c = 0; c < n_rhs; ++c) out[c] += v * in[c];
    }
  }
  return y;
}

}  // namespace sptomo
