#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ptycho/errors.hpp"

namespace ptycho {

using cplx = std::complex<double>;

/// Dense row-major 2-D array. Element (r, c) lives at index r * cols + c.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ContractError("grid data length " + std::to_string(data_.size()) +
                          " does not match shape " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
    }
  }

  static Grid square(std::size_t side, T fill = T{}) { return Grid(side, side, fill); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  const std::vector<T>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexField = Grid<cplx>;
using RealField = Grid<double>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) +
                        "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                        "x" + std::to_string(b.cols()));
  }
}

struct Offset {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const Offset&) const = default;
};

/// Scan positions of an m x m probe over an n x n object. Offsets are the
/// top-left corners of each illuminated patch and must keep the patch inside
/// the object.
class ScanGeometry {
 public:
  ScanGeometry() = default;
  ScanGeometry(std::size_t probe_side, std::size_t object_side, std::vector<Offset> offsets);

  std::size_t probe_side() const noexcept { return probe_side_; }
  std::size_t object_side() const noexcept { return object_side_; }
  std::size_t count() const noexcept { return offsets_.size(); }
  const std::vector<Offset>& offsets() const noexcept { return offsets_; }
  const Offset& offset(std::size_t k) const;

  bool operator==(const ScanGeometry&) const = default;

 private:
  std::size_t probe_side_ = 0;
  std::size_t object_side_ = 0;
  std::vector<Offset> offsets_;
};

ComplexField extract_patch(const ComplexField& object, const ScanGeometry& geometry, std::size_t k);
void extract_patch(const ComplexField& object, const ScanGeometry& geometry, std::size_t k,
                   ComplexField& patch);

/// Overwrites the k-th window of `object` with `patch`; all other pixels are untouched.
void scatter_patch(ComplexField& object, const ComplexField& patch, const ScanGeometry& geometry,
                   std::size_t k);

// Unitary 2-D DFT on square fields: both directions scale by 1/m, so
// Parseval holds without extra factors.
ComplexField fft2(const ComplexField& x);
ComplexField ifft2(const ComplexField& y);
void fft2_inplace(ComplexField& x);
void ifft2_inplace(ComplexField& y);

ComplexField hadamard(const ComplexField& a, const ComplexField& b);
RealField abs2(const ComplexField& a);
RealField abs(const ComplexField& a);
/// Principal argument in (-pi, pi]; phase(0) = 0.
RealField phase(const ComplexField& a);
double arg0(cplx v) noexcept;

/// <a, b> = sum conj(a_i) b_i
cplx inner(std::span<const cplx> a, std::span<const cplx> b);
double norm2_squared(std::span<const cplx> a);
double norm2_squared(std::span<const double> a);
double max_abs(std::span<const cplx> a);
bool all_finite(const ComplexField& a);
bool all_finite(const RealField& a);

ComplexField polar_field(const RealField& magnitude, const RealField& phase);

}  // namespace ptycho
