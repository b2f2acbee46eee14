// AVX2+FMA variants of the elementwise kernels. Functions carry a target
// attribute instead of compiling the translation unit with -mavx2 so that no
// inline library code gets emitted with AVX2 instructions.
//
// Layout: one __m256d holds two complex doubles as [re0, im0, re1, im1].

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "ptycho/simd.hpp"

#define PTYCHO_AVX2 __attribute__((target("avx2,fma")))

namespace ptycho::simd {
namespace {

PTYCHO_AVX2 inline __m256d load(const cplx* p) {
  return _mm256_loadu_pd(reinterpret_cast<const double*>(p));
}
PTYCHO_AVX2 inline void store(cplx* p, __m256d v) {
  _mm256_storeu_pd(reinterpret_cast<double*>(p), v);
}

// Two reals broadcast to [r0, r0, r1, r1].
PTYCHO_AVX2 inline __m256d load_pair_dup(const double* p) {
  const __m128d r = _mm_loadu_pd(p);
  return _mm256_permute4x64_pd(_mm256_castpd128_pd256(r), 0x50);
}

// [n0, n0, n1, n1] -> stores n0, n1
PTYCHO_AVX2 inline void store_pair(double* p, __m256d dup) {
  const __m256d packed = _mm256_permute4x64_pd(dup, 0x08);
  _mm_storeu_pd(p, _mm256_castpd256_pd128(packed));
}

PTYCHO_AVX2 inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d b_re = _mm256_movedup_pd(b);
  const __m256d b_im = _mm256_permute_pd(b, 0xF);
  const __m256d a_sw = _mm256_permute_pd(a, 0x5);
  return _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im));
}

PTYCHO_AVX2 inline __m256d conj(__m256d a) {
  return _mm256_xor_pd(a, _mm256_set_pd(-0.0, 0.0, -0.0, 0.0));
}

// |a|^2 duplicated into both lanes of each complex slot.
PTYCHO_AVX2 inline __m256d norm_dup(__m256d a) {
  const __m256d sq = _mm256_mul_pd(a, a);
  return _mm256_add_pd(sq, _mm256_permute_pd(sq, 0x5));
}

PTYCHO_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double scalar_norm(cplx v) { return v.real() * v.real() + v.imag() * v.imag(); }

PTYCHO_AVX2 void multiply(std::span<const cplx> a, std::span<const cplx> b, std::span<cplx> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(&out[i], cmul(load(&a[i]), load(&b[i])));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

PTYCHO_AVX2 void scale(std::span<cplx> a, double s) {
  const std::size_t n = a.size();
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store(&a[i], _mm256_mul_pd(load(&a[i]), vs));
  for (; i < n; ++i) a[i] *= s;
}

PTYCHO_AVX2 void abs2(std::span<const cplx> a, std::span<double> out) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) store_pair(&out[i], norm_dup(load(&a[i])));
  for (; i < n; ++i) out[i] = scalar_norm(a[i]);
}

PTYCHO_AVX2 double max_abs2(std::span<const cplx> a) {
  const std::size_t n = a.size();
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = _mm256_max_pd(m, norm_dup(load(&a[i])));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double best = std::max(lanes[0], lanes[2]);
  for (; i < n; ++i) best = std::max(best, scalar_norm(a[i]));
  return best;
}

PTYCHO_AVX2 void ramp_regularizer(std::span<const cplx> a, double s, std::span<double> out) {
  const double peak = max_abs2(a);
  const std::size_t n = a.size();
  const __m256d vp = _mm256_set1_pd(peak);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    store_pair(&out[i], _mm256_mul_pd(vs, _mm256_sub_pd(vp, norm_dup(load(&a[i])))));
  }
  for (; i < n; ++i) out[i] = s * (peak - scalar_norm(a[i]));
}

PTYCHO_AVX2 void proximal_step(std::span<const cplx> x, std::span<const cplx> p,
                               std::span<const cplx> target, std::span<const double> reg,
                               double floor, std::span<cplx> out) {
  const std::size_t n = x.size();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vfloor = _mm256_set1_pd(floor);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = load(&x[i]);
    const __m256d vp = load(&p[i]);
    const __m256d residual = _mm256_sub_pd(load(&target[i]), cmul(vp, vx));
    __m256d den = _mm256_add_pd(load_pair_dup(&reg[i]), norm_dup(vp));
    den = _mm256_blendv_pd(den, vfloor, _mm256_cmp_pd(den, zero, _CMP_EQ_OQ));
    const __m256d step = _mm256_div_pd(cmul(conj(vp), residual), den);
    store(&out[i], _mm256_add_pd(vx, step));
  }
  for (; i < n; ++i) {
    double den = reg[i] + scalar_norm(p[i]);
    if (den == 0.0) den = floor;
    out[i] = x[i] + std::conj(p[i]) * (target[i] - p[i] * x[i]) / den;
  }
}

PTYCHO_AVX2 void project_modulus(std::span<cplx> fourier, std::span<const double> intensity,
                                 std::span<cplx> phasor) {
  const std::size_t n = fourier.size();
  const bool cached = !phasor.empty();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set_pd(0.0, 1.0, 0.0, 1.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d f = load(&fourier[i]);
    const __m256d nrm = norm_dup(f);
    const __m256d nonzero = _mm256_cmp_pd(nrm, zero, _CMP_NEQ_UQ);
    const __m256d fallback = cached ? load(&phasor[i]) : one;
    const __m256d unit = _mm256_blendv_pd(fallback, _mm256_div_pd(f, _mm256_sqrt_pd(nrm)), nonzero);
    if (cached) store(&phasor[i], unit);
    const __m256d amp = _mm256_sqrt_pd(load_pair_dup(&intensity[i]));
    store(&fourier[i], _mm256_mul_pd(amp, unit));
  }
  for (; i < n; ++i) {
    const double nrm = scalar_norm(fourier[i]);
    cplx unit = nrm != 0.0 ? fourier[i] / std::sqrt(nrm) : (cached ? phasor[i] : cplx(1.0, 0.0));
    if (cached) phasor[i] = unit;
    fourier[i] = std::sqrt(intensity[i]) * unit;
  }
}

// Principal square root, branch-aligned with `current`:
//   r = |w|; for Re w >= 0: re = sqrt((r + Re w)/2), im = Im w / (2 re)
//            for Re w <  0: im = copysign(sqrt((r - Re w)/2), Im w), re = |Im w| / (2 |im|)
PTYCHO_AVX2 void geometric_mean(std::span<const cplx> current, std::span<const cplx> candidate,
                                std::span<cplx> out) {
  const std::size_t n = current.size();
  const __m256d zero = _mm256_setzero_pd();
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d cur = load(&current[i]);
    const __m256d w = cmul(cur, load(&candidate[i]));
    const __m256d w_re = _mm256_movedup_pd(w);           // [re, re]
    const __m256d w_im = _mm256_permute_pd(w, 0xF);      // [im, im]
    const __m256d r = _mm256_sqrt_pd(norm_dup(w));
    const __m256d abs_re = _mm256_andnot_pd(sign_bit, w_re);
    // big = sqrt((r + |Re w|)/2) is the larger-magnitude component.
    const __m256d big = _mm256_sqrt_pd(_mm256_mul_pd(half, _mm256_add_pd(r, abs_re)));
    const __m256d small = _mm256_div_pd(_mm256_andnot_pd(sign_bit, w_im), _mm256_add_pd(big, big));
    const __m256d re_nonneg = _mm256_cmp_pd(w_re, zero, _CMP_GE_OQ);
    // Re w >= 0: (big, sign(im) * small); Re w < 0: (small, sign(im) * big)
    const __m256d re_part = _mm256_blendv_pd(small, big, re_nonneg);
    const __m256d im_mag = _mm256_blendv_pd(big, small, re_nonneg);
    const __m256d im_part = _mm256_or_pd(im_mag, _mm256_and_pd(sign_bit, w_im));
    // pack [re_part lane0, im_part lane1, re_part lane2, im_part lane3]
    __m256d root = _mm256_blend_pd(re_part, im_part, 0xA);
    // align: Re(root * conj(cur)) = root.re*cur.re + root.im*cur.im
    const __m256d prod = _mm256_mul_pd(root, cur);
    const __m256d dot = _mm256_add_pd(prod, _mm256_permute_pd(prod, 0x5));
    const __m256d flip = _mm256_and_pd(sign_bit, _mm256_cmp_pd(dot, zero, _CMP_LT_OQ));
    root = _mm256_xor_pd(root, flip);
    const __m256d is_zero = _mm256_cmp_pd(r, zero, _CMP_EQ_OQ);
    store(&out[i], _mm256_blendv_pd(root, zero, is_zero));
  }
  for (; i < n; ++i) {
    const cplx prod = current[i] * candidate[i];
    if (prod == cplx(0.0, 0.0)) {
      out[i] = 0.0;
      continue;
    }
    cplx root = std::sqrt(prod);
    if (root.real() * current[i].real() + root.imag() * current[i].imag() < 0.0) root = -root;
    out[i] = root;
  }
}

PTYCHO_AVX2 double residual_norm2(std::span<const cplx> a, std::span<const cplx> b,
                                  std::span<const cplx> c) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d d = _mm256_sub_pd(cmul(load(&a[i]), load(&b[i])), load(&c[i]));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += scalar_norm(a[i] * b[i] - c[i]);
  return sum;
}

PTYCHO_AVX2 double diff_norm2(std::span<const cplx> a, std::span<const cplx> b) {
  const std::size_t n = a.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d d = _mm256_sub_pd(load(&a[i]), load(&b[i]));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += scalar_norm(a[i] - b[i]);
  return sum;
}

}  // namespace

namespace detail {
const KernelTable avx2_table{
    Level::avx2,   multiply,        scale,          abs2,           max_abs2,  ramp_regularizer,
    proximal_step, project_modulus, geometric_mean, residual_norm2, diff_norm2,
};
}  // namespace detail

}  // namespace ptycho::simd

#endif
