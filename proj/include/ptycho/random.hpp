#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ptycho {

/// Seedable generator with fully specified output streams.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the C++
/// standard. The standard library's distributions are implementation-defined,
/// so every distribution used for scan orders, noise and initial guesses is
/// implemented here:
///   uniform()      (engine() >> 11) * 2^-53, in [0, 1)
///   index(n)       rejection from the top 64-bit range, unbiased
///   normal()       Box-Muller, cosine branch only (one normal per two uniforms)
///   poisson(lam)   multiplication method for lam < 10, Hoermann's PTRS otherwise
///   permutation(n) Fisher-Yates, walking i = n-1 .. 1 with j = index(i + 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();
  std::uint64_t index(std::uint64_t n);
  double normal();
  std::uint64_t poisson(double lambda);
  std::vector<std::size_t> permutation(std::size_t n);

  bool operator==(const Rng&) const = default;

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent stream seeds from (seed, stream).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace ptycho
