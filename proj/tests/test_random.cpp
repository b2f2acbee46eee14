#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "ptycho/random.hpp"

using namespace ptycho;

TEST_CASE("engine stream is the standard mt19937_64") {
  // The standard pins the 10000th output for default seed 5489.
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next();
  CHECK(v == 9981545732273789042ull);
}

TEST_CASE("uniform is the top 53 bits") {
  Rng a(3), b(3);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == static_cast<double>(b.next() >> 11) * 0x1p-53);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("index is unbiased and in range") {
  Rng rng(4);
  std::vector<int> counts(7);
  for (int i = 0; i < 70000; ++i) ++counts[rng.index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(rng.index(1) == 0);
}

TEST_CASE("normal moments") {
  Rng rng(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("poisson mean and variance on both branches") {
  for (double lam : {0.0, 0.5, 3.0, 9.9, 10.0, 42.0, 1e4}) {
    CAPTURE(lam);
    Rng rng(6);
    double s = 0, s2 = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(lam));
      s += x;
      s2 += x * x;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    const double se = std::sqrt(std::max(lam, 1e-3) / n);
    CHECK(std::abs(mean - lam) < 5 * se + 1e-12);
    if (lam > 0) CHECK(std::abs(var / lam - 1.0) < 0.05);
  }
}

TEST_CASE("permutation is a permutation and reproducible") {
  Rng a(7), b(7);
  for (std::size_t n : {0u, 1u, 2u, 17u, 300u}) {
    auto p = a.permutation(n);
    CHECK(p == b.permutation(n));
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(n);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
  }
}

TEST_CASE("mix_seed separates streams") {
  CHECK(mix_seed(1, 1) != mix_seed(1, 2));
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(9, 3) == mix_seed(9, 3));
}
