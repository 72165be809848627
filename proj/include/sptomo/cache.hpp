#pragma once

#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "sptomo/core.hpp"
#include "sptomo/filters.hpp"
#include "sptomo/geometry.hpp"
#include "sptomo/kernel.hpp"
#include "sptomo/sparse.hpp"

namespace sptomo {

static_assert(std::endian::native == std::endian::little,
              "cache I/O assumes a little-endian host");

inline constexpr std::uint32_t kCacheFormatVersion = 1;
inline constexpr char kCacheMagic[8] = {'S', 'G', 'C', 'S', 'R', '0', '0', '1'};

struct MatrixCacheKey {
  std::array<unsigned char, 32> bytes{};
  std::string digest;  // lowercase hex of bytes

  friend bool operator==(const MatrixCacheKey& a, const MatrixCacheKey& b) {
    return a.bytes == b.bytes;
  }
};

namespace detail {

class Hasher {
 public:
  template <class T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  MatrixCacheKey finish() const {
    MatrixCacheKey key;
    unsigned int len = 0;
    if (EVP_Digest(buf_.data(), buf_.size(), key.bytes.data(), &len,
                   EVP_sha256(), nullptr) != 1 ||
        len != key.bytes.size())
      throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    for (unsigned char b : key.bytes) {
      key.digest.push_back(hex[b >> 4]);
      key.digest.push_back(hex[b & 15]);
    }
    return key;
  }

 private:
  std::vector<unsigned char> buf_;
};

}  // namespace detail

/// Digest over everything that determines the matrix. `extra` carries any
/// further parameter that changes the values (e.g. the calibration setup).
inline MatrixCacheKey make_cache_key(const ScanGeometry& geom,
                                     const KernelSpec& spec,
                                     FilterKind filter,
                                     std::string_view extra = {}) {
  detail::Hasher h;
  h.put_string("sptomo-csr");
  h.put<std::uint32_t>(kCacheFormatVersion);
  h.put<std::uint64_t>(geom.n_p);
  h.put<std::uint64_t>(geom.n_theta);
  h.put<std::uint64_t>(geom.n_x);
  h.put<std::uint64_t>(geom.n_y);
  h.put<std::uint64_t>(geom.angles.size());
  for (double a : geom.angles) h.put(a);
  h.put(geom.center);
  h.put_string(to_string(spec.family));
  h.put(spec.shape);
  h.put<std::int64_t>(spec.width);
  h.put_string(to_string(filter));
  h.put_string(extra);
  return h.finish();
}

inline std::filesystem::path cache_path(const MatrixCacheKey& key,
                                        const std::filesystem::path& dir) {
  return dir / (key.digest + ".sgcsr");
}

namespace detail {

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void write_array(std::ostream& os, const std::vector<T>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(T)));
}

inline void write_block(std::ostream& os, const MatrixCacheKey& key,
                        const CsrMatrix& m) {
  os.write(kCacheMagic, sizeof kCacheMagic);
  write_pod<std::uint32_t>(os, kCacheFormatVersion);
  write_pod<std::uint64_t>(os, m.n_rows);
  write_pod<std::uint64_t>(os, m.n_cols);
  write_pod<std::uint64_t>(os, m.nnz());
  os.write(reinterpret_cast<const char*>(key.bytes.data()), 32);
  write_array(os, m.row_ptr);
  write_array(os, m.col_idx);
  // std::complex<double> is layout-compatible with double[2] (re, im).
  write_array(os, m.vals);
}

class Reader {
 public:
  Reader(std::istream& is, std::uint64_t remaining, std::string name)
      : is_(is), remaining_(remaining), name_(std::move(name)) {}

  void raw(void* dst, std::uint64_t n) {
    if (n > remaining_) fail("truncated file");
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!is_) fail("read error");
    remaining_ -= n;
  }
  template <class T>
  T pod() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  template <class T>
  std::vector<T> array(std::uint64_t count) {
    if (count > remaining_ / sizeof(T)) fail("array length exceeds file size");
    std::vector<T> v(count);
    raw(v.data(), count * sizeof(T));
    return v;
  }
  std::uint64_t remaining() const { return remaining_; }
  [[noreturn]] void fail(const std::string& why) const {
    throw CorruptCache(name_ + ": " + why);
  }

 private:
  std::istream& is_;
  std::uint64_t remaining_;
  std::string name_;
};

inline CsrMatrix read_block(Reader& rd, const MatrixCacheKey& key) {
  char magic[8];
  rd.raw(magic, 8);
  if (std::memcmp(magic, kCacheMagic, 8) != 0) rd.fail("bad magic");
  if (rd.pod<std::uint32_t>() != kCacheFormatVersion)
    rd.fail("unsupported version");
  CsrMatrix m;
  m.n_rows = rd.pod<std::uint64_t>();
  m.n_cols = rd.pod<std::uint64_t>();
  const auto nnz = rd.pod<std::uint64_t>();
  std::array<unsigned char, 32> digest{};
  rd.raw(digest.data(), 32);
  if (digest != key.bytes) rd.fail("digest does not match key");
  if (m.n_rows >= rd.remaining() / 8) rd.fail("row count exceeds file size");
  m.row_ptr = rd.array<std::uint64_t>(m.n_rows + 1);
  m.col_idx = rd.array<std::uint64_t>(nnz);
  m.vals = rd.array<cplx>(nnz);
  if (m.row_ptr.front() != 0 || m.row_ptr.back() != nnz)
    rd.fail("row_ptr endpoints inconsistent with nnz");
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    if (m.row_ptr[r] > m.row_ptr[r + 1]) rd.fail("row_ptr not monotone");
    for (auto k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k)
      if (m.col_idx[k] >= m.n_cols ||
          (k > m.row_ptr[r] && m.col_idx[k] <= m.col_idx[k - 1]))
        rd.fail("column indices out of range or unsorted");
  }
  return m;
}

}  // namespace detail

/// Atomic write: temp file in the same directory, then rename.
inline void cache_store(const MatrixCacheKey& key, const SparseGridCSR& m,
                        const std::filesystem::path& dir) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto final_path = cache_path(key, dir);
  auto tmp = final_path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write cache file " + tmp.string());
    detail::write_block(os, key, m.matrix);
    detail::write_block(os, key, m.adjoint);
    os.flush();
    if (!os) {
      std::filesystem::remove(tmp, ec);
      throw IoError("failed writing cache file " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename cache file into " + final_path.string());
  }
}

/// nullopt on a miss; CorruptCache if the file exists but does not verify.
inline std::optional<SparseGridCSR> cache_load(const MatrixCacheKey& key,
                                               const std::filesystem::path& dir) {
  const auto path = cache_path(key, dir);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) return std::nullopt;
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  detail::Reader rd(is, size, path.string());
  SparseGridCSR out;
  out.matrix = detail::read_block(rd, key);
  out.adjoint = detail::read_block(rd, key);
  if (rd.remaining() != 0) rd.fail("trailing bytes");
  if (out.adjoint.n_rows != out.matrix.n_cols ||
      out.adjoint.n_cols != out.matrix.n_rows ||
      out.adjoint.nnz() != out.matrix.nnz())
    rd.fail("transpose block does not match matrix");
  return out;
}

}  // namespace sptomo
