#include <doctest.h>

#include "ptycho/simd.hpp"
#include "support.hpp"

using namespace ptycho;

namespace {

// Odd lengths exercise the scalar tails of the vector loops.
const std::size_t kLengths[] = {0, 1, 3, 4, 7, 16, 33, 1025};

std::vector<cplx> vec(Rng& rng, std::size_t n, bool with_zeros = false) {
  std::vector<cplx> v(n);
  for (auto& x : v) x = with_zeros && rng.uniform() < 0.2 ? cplx(0.0) : testkit::gauss_c(rng);
  return v;
}

std::vector<double> rvec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
  return v;
}

bool close(cplx a, cplx b, double tol = 1e-13) {
  return std::abs(a - b) <= tol * (1.0 + std::abs(a));
}

bool close(double a, double b, double tol = 1e-13) {
  return std::abs(a - b) <= tol * (1.0 + std::abs(a));
}

}  // namespace

TEST_CASE("dispatch names and fallback") {
  CHECK(simd::available(simd::Level::scalar));
  CHECK(simd::parse_level("scalar") == simd::Level::scalar);
  CHECK(simd::parse_level("avx2") == simd::Level::avx2);
  CHECK_THROWS(simd::parse_level("neon"));
  CHECK(simd::table(simd::Level::scalar).level == simd::Level::scalar);
}

TEST_CASE("vector kernels agree with the scalar reference") {
  if (!simd::available(simd::Level::avx2)) {
    MESSAGE("AVX2 not available on this host, equivalence not exercised");
    return;
  }
  const auto& s = simd::table(simd::Level::scalar);
  const auto& v = simd::table(simd::Level::avx2);
  Rng rng(21);
  for (std::size_t n : kLengths) {
    CAPTURE(n);
    const auto a = vec(rng, n, true), b = vec(rng, n), c = vec(rng, n);
    const auto reg = rvec(rng, n);
    const auto inten = rvec(rng, n);
    std::vector<cplx> o1(n), o2(n);
    std::vector<double> r1(n), r2(n);

    s.multiply(a, b, o1);
    v.multiply(a, b, o2);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(o1[i], o2[i]));

    auto sa = a, va = a;
    s.scale(sa, 0.3);
    v.scale(va, 0.3);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(sa[i], va[i]));

    s.abs2(a, r1);
    v.abs2(a, r2);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(r1[i], r2[i]));
    CHECK(s.max_abs2(a) == v.max_abs2(a));  // max is exact

    s.ramp_regularizer(b, 0.05, r1);
    v.ramp_regularizer(b, 0.05, r2);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(r1[i], r2[i]));

    s.proximal_step(b, a, c, reg, 1e-30, o1);
    v.proximal_step(b, a, c, reg, 1e-30, o2);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(o1[i], o2[i], 1e-12));

    auto f1 = a, f2 = a;
    auto p1 = vec(rng, n), p2 = p1;
    for (auto& p : p1) p /= std::abs(p);
    p2 = p1;
    s.project_modulus(f1, inten, p1);
    v.project_modulus(f2, inten, p2);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(close(f1[i], f2[i]));
      CHECK(close(p1[i], p2[i]));
    }
    auto g1 = a, g2 = a;
    s.project_modulus(g1, inten, {});
    v.project_modulus(g2, inten, {});
    for (std::size_t i = 0; i < n; ++i) CHECK(close(g1[i], g2[i]));

    s.geometric_mean(a, b, o1);
    v.geometric_mean(a, b, o2);
    for (std::size_t i = 0; i < n; ++i) CHECK(close(o1[i], o2[i], 1e-12));

    CHECK(close(s.residual_norm2(a, b, c), v.residual_norm2(a, b, c), 1e-12));
    CHECK(close(s.diff_norm2(a, b), v.diff_norm2(a, b), 1e-12));
  }
}

TEST_CASE("kernels are deterministic within a level") {
  Rng rng(22);
  const auto a = vec(rng, 257), b = vec(rng, 257), c = vec(rng, 257);
  for (auto level : {simd::Level::scalar, simd::Level::avx2}) {
    if (!simd::available(level)) continue;
    const auto& t = simd::table(level);
    CHECK(t.residual_norm2(a, b, c) == t.residual_norm2(a, b, c));
    std::vector<cplx> o1(257), o2(257);
    t.geometric_mean(a, b, o1);
    t.geometric_mean(a, b, o2);
    CHECK(o1 == o2);
  }
}

TEST_CASE("geometric mean branch rule") {
  const auto& s = simd::table(simd::Level::scalar);
  // current = 1, candidate = -1: product -1, roots +-i, both at exactly
  // pi/2 from current, so the principal root i is taken.
  std::vector<cplx> cur{1.0, 0.0, 2.0, cplx(0, 1)}, cand{-1.0, 5.0, 8.0, cplx(0, 1)}, out(4);
  s.geometric_mean(cur, cand, out);
  CHECK(out[0] == cplx(0.0, 1.0));
  CHECK(out[1] == cplx(0.0));
  CHECK(std::abs(out[2] - 4.0) < 1e-15);
  CHECK(std::abs(out[3] - cplx(0, 1)) < 1e-15);
}
