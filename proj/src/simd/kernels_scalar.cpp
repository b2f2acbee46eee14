#include <algorithm>
#include <cmath>

#include "ptycho/simd.hpp"

namespace ptycho::simd {
namespace {

void multiply(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
}

void scale(std::span<cplx> a, double s) {
  for (auto& v : a) v *= s;
}

double norm(cplx v) { return v.real() * v.real() + v.imag() * v.imag(); }

void abs2(std::span<const cplx> a, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = norm(a[i]);
}

double max_abs2(std::span<const cplx> a) {
  double m = 0.0;
  for (auto v : a) m = std::max(m, norm(v));
  return m;
}

void ramp_regularizer(std::span<const cplx> a, double s, std::span<double> out) {
  const double peak = max_abs2(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * (peak - norm(a[i]));
}

void proximal_step(std::span<const cplx> x, std::span<const cplx> p, std::span<const cplx> target,
                   std::span<const double> reg, double floor, std::span<cplx> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    double den = reg[i] + norm(p[i]);
    if (den == 0.0) den = floor;
    out[i] = x[i] + std::conj(p[i]) * (target[i] - p[i] * x[i]) / den;
  }
}

void project_modulus(std::span<cplx> fourier, std::span<const double> intensity,
                     std::span<cplx> phasor) {
  const bool cached = !phasor.empty();
  for (std::size_t i = 0; i < fourier.size(); ++i) {
    const double n = norm(fourier[i]);
    cplx unit;
    if (n != 0.0) {
      unit = fourier[i] / std::sqrt(n);
    } else {
      unit = cached ? phasor[i] : cplx(1.0, 0.0);
    }
    if (cached) phasor[i] = unit;
    fourier[i] = std::sqrt(intensity[i]) * unit;
  }
}

void geometric_mean(std::span<const cplx> current, std::span<const cplx> candidate,
                    std::span<cplx> out) {
  for (std::size_t i = 0; i < current.size(); ++i) {
    const cplx prod = current[i] * candidate[i];
    if (prod == cplx(0.0, 0.0)) {
      out[i] = 0.0;
      continue;
    }
    cplx root = std::sqrt(prod);
    const double align = root.real() * current[i].real() + root.imag() * current[i].imag();
    if (align < 0.0) root = -root;
    out[i] = root;
  }
}

double residual_norm2(std::span<const cplx> a, std::span<const cplx> b, std::span<const cplx> c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += norm(a[i] * b[i] - c[i]);
  return sum;
}

double diff_norm2(std::span<const cplx> a, std::span<const cplx> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += norm(a[i] - b[i]);
  return sum;
}

}  // namespace

namespace detail {
const KernelTable scalar_table{
    Level::scalar,   multiply,      scale,          abs2,           max_abs2,  ramp_regularizer,
    proximal_step,   project_modulus, geometric_mean, residual_norm2, diff_norm2,
};
}  // namespace detail

}  // namespace ptycho::simd
