#pragma once

#include <span>
#include <string_view>

#include "ptycho/field.hpp"

// Elementwise kernels behind the region updates. Each kernel has a scalar
// reference implementation and, on x86-64 hosts with AVX2+FMA, a vectorized
// variant selected at runtime. The vector variants agree with the reference
// to rounding (FMA contraction and reduction order differ); within one
// dispatch level every kernel is deterministic.
namespace ptycho::simd {

enum class Level { scalar, avx2 };

std::string_view to_string(Level level) noexcept;
Level parse_level(std::string_view name);

bool available(Level level) noexcept;
Level best_available() noexcept;

/// Level used by kernels(). Defaults to PTYCHO_SIMD from the environment
/// ("scalar" or "avx2") if set, else best_available(). Changing it while
/// another thread is inside a kernel is not supported.
Level active() noexcept;
void set_active(Level level);

struct KernelTable {
  Level level;

  // out = a * b
  void (*multiply)(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out);
  // a *= s
  void (*scale)(std::span<cplx> a, double s);
  // out = |a|^2
  void (*abs2)(std::span<const cplx> a, std::span<double> out);
  double (*max_abs2)(std::span<const cplx> a);
  // out = scale * (max|a|^2 - |a|^2)
  void (*ramp_regularizer)(std::span<const cplx> a, double scale, std::span<double> out);
  // out = x + conj(p) / (reg + |p|^2) * (target - p * x); a zero denominator
  // is replaced by `floor`.
  void (*proximal_step)(std::span<const cplx> x, std::span<const cplx> p,
                        std::span<const cplx> target, std::span<const double> reg, double floor,
                        std::span<cplx> out);
  // fourier <- sqrt(intensity) * unit phasor of fourier. Where |fourier|^2 == 0
  // the phasor is taken from `phasor` (or 1 when `phasor` is empty). When
  // `phasor` is non-empty it is overwritten with the phasors used.
  void (*project_modulus)(std::span<cplx> fourier, std::span<const double> intensity,
                          std::span<cplx> phasor);
  // out^2 = current * candidate, branch with Re(out * conj(current)) >= 0;
  // principal root on ties, 0 where the product is 0.
  void (*geometric_mean)(std::span<const cplx> current, std::span<const cplx> candidate,
                         std::span<cplx> out);
  // sum |a * b - c|^2
  double (*residual_norm2)(std::span<const cplx> a, std::span<const cplx> b,
                           std::span<const cplx> c);
  // sum |a - b|^2
  double (*diff_norm2)(std::span<const cplx> a, std::span<const cplx> b);
};

const KernelTable& table(Level level);
const KernelTable& kernels();

namespace detail {
extern const KernelTable scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace ptycho::simd
