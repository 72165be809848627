#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sptomo {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

// Error hierarchy. Every failure the library reports derives from Error so the
// CLI can map it to a nonzero exit code with a message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPTOMO_DEFINE_ERROR(Name)              \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

SPTOMO_DEFINE_ERROR(InvalidArgument);
SPTOMO_DEFINE_ERROR(InvalidGeometry);
SPTOMO_DEFINE_ERROR(ShapeMismatch);
SPTOMO_DEFINE_ERROR(NearZeroDenominator);
SPTOMO_DEFINE_ERROR(CorruptCache);
SPTOMO_DEFINE_ERROR(InvalidFlatField);
SPTOMO_DEFINE_ERROR(GridTooLarge);
SPTOMO_DEFINE_ERROR(DivergenceDetected);
SPTOMO_DEFINE_ERROR(NonFiniteValue);
SPTOMO_DEFINE_ERROR(IoError);

#undef SPTOMO_DEFINE_ERROR

/// Dense row-major 2D array. Sinograms are (n_theta x n_p), tomograms are
/// (n_y x n_x).
template <class T>
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid2D(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw ShapeMismatch("buffer of " + std::to_string(data_.size()) +
                          " elements for a " + std::to_string(rows_) + "x" +
                          std::to_string(cols_) + " grid");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool same_shape(std::size_t rows, std::size_t cols) const noexcept {
    return rows_ == rows && cols_ == cols;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealImage = Grid2D<double>;
using ComplexImage = Grid2D<cplx>;

inline ComplexImage to_complex(const RealImage& img) {
  ComplexImage out(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i];
  return out;
}

inline RealImage real_part(const ComplexImage& img) {
  RealImage out(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i].real();
  return out;
}

inline RealImage imag_part(const ComplexImage& img) {
  RealImage out(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i].imag();
  return out;
}

}  // namespace sptomo
