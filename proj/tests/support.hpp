#pragma once

// Generators and slow reference implementations shared by the test files.
// Nothing here calls into the library's FFT or update kernels, so it can
// serve as an independent oracle.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "ptycho/field.hpp"
#include "ptycho/forward.hpp"
#include "ptycho/random.hpp"

namespace testkit {

using ptycho::ComplexField;
using ptycho::cplx;
using ptycho::RealField;

inline cplx gauss_c(ptycho::Rng& rng) { return {rng.normal(), rng.normal()}; }

inline ComplexField random_field(ptycho::Rng& rng, std::size_t side, double scale = 1.0) {
  ComplexField f(side, side);
  for (auto& v : f) v = scale * gauss_c(rng);
  return f;
}

// Magnitudes bounded away from zero, so no division blows up in oracles.
inline ComplexField random_smooth_field(ptycho::Rng& rng, std::size_t side, double lo = 0.5,
                                        double hi = 1.5) {
  ComplexField f(side, side);
  for (auto& v : f) {
    const double r = lo + (hi - lo) * rng.uniform();
    const double t = 2.0 * std::numbers::pi * rng.uniform();
    v = std::polar(r, t);
  }
  return f;
}

inline RealField random_intensity(ptycho::Rng& rng, std::size_t side, double scale = 1.0) {
  RealField d(side, side);
  for (auto& v : d) v = scale * (0.1 + rng.uniform());
  return d;
}

// Probe with some exactly-zero 2x2 blocks and some tiny entries, to stress
// the 0/0 guards in the multigrid weights.
inline ComplexField random_probe_with_holes(ptycho::Rng& rng, std::size_t side) {
  ComplexField q = random_field(rng, side);
  for (std::size_t r = 0; r < side; r += 2) {
    for (std::size_t c = 0; c < side; c += 2) {
      const double u = rng.uniform();
      if (u < 0.15) {
        q(r, c) = q(r, c + 1) = q(r + 1, c) = q(r + 1, c + 1) = 0.0;
      } else if (u < 0.3) {
        q(r + rng.index(2), c + rng.index(2)) *= 1e-9;
      } else if (u < 0.4) {
        q(r + rng.index(2), c + rng.index(2)) = 0.0;
      }
    }
  }
  return q;
}

// O(m^4) unitary DFT, straight from the definition.
inline ComplexField naive_dft(const ComplexField& x, int sign = -1) {
  const std::size_t m = x.rows();
  ComplexField y(m, m);
  const double w = sign * 2.0 * std::numbers::pi / static_cast<double>(m);
  for (std::size_t k1 = 0; k1 < m; ++k1) {
    for (std::size_t k2 = 0; k2 < m; ++k2) {
      cplx acc = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
          const double ph = w * static_cast<double>((k1 * a + k2 * b) % m);
          acc += x(a, b) * cplx(std::cos(ph), std::sin(ph));
        }
      }
      y(k1, k2) = acc / static_cast<double>(m);
    }
  }
  return y;
}

// R_k = F^-1(sqrt(d) * phasor(F(Q z))), phasor 1 at exact zeros.
inline ComplexField naive_revised(const ComplexField& q, const ComplexField& z, const RealField& d) {
  ComplexField w(q.rows(), q.cols());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = q[i] * z[i];
  ComplexField f = naive_dft(w, -1);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = std::abs(f[i]);
    const cplx ph = a > 0.0 ? f[i] / a : cplx(1.0);
    f[i] = std::sqrt(d[i]) * ph;
  }
  return naive_dft(f, +1);
}

inline double naive_misfit_region(const ComplexField& q, const ComplexField& z, const RealField& d) {
  const ComplexField r = naive_revised(q, z, d);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += std::norm(q[i] * z[i] - r[i]);
  return 0.5 * s;
}

inline double max_abs_diff(const ComplexField& a, const ComplexField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const RealField& a, const RealField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double norm(const ComplexField& a) { return std::sqrt(ptycho::norm2_squared(a.span())); }

// Plain rPIE written out directly from the update formulas: one residual per
// region, object and probe steps from it, probe replaced in place. Visits
// regions in the order drawn by an Rng seeded like the solver's.
struct ReferenceRpie {
  ComplexField probe;
  ComplexField object;
};

inline ReferenceRpie reference_rpie(const ptycho::Dataset& data, ComplexField probe,
                                    ComplexField object, double alpha, std::uint64_t seed,
                                    int sweeps) {
  ptycho::Rng rng(seed);
  const auto& g = data.geometry;
  const std::size_t m = g.probe_side();
  for (int s = 0; s < sweeps; ++s) {
    for (std::size_t k : rng.permutation(g.count())) {
      const auto off = g.offset(k);
      ComplexField z(m, m);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) z(r, c) = object(off.row + r, off.col + c);
      }
      const ComplexField rev = naive_revised(probe, z, data.intensities[k]);
      double qmax = 0, zmax = 0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        qmax = std::max(qmax, std::norm(probe[i]));
        zmax = std::max(zmax, std::norm(z[i]));
      }
      ComplexField zn(m, m), qn(m, m);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const cplx res = rev[i] - probe[i] * z[i];
        const double q2 = std::norm(probe[i]), z2 = std::norm(z[i]);
        zn[i] = z[i] + std::conj(probe[i]) / (alpha * (qmax - q2) + q2) * res;
        qn[i] = probe[i] + std::conj(z[i]) / ((zmax - z2) + z2) * res;
      }
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) object(off.row + r, off.col + c) = zn(r, c);
      }
      probe = qn;
    }
  }
  return {probe, object};
}

// Small consistent dataset: random object, probe, raster scan.
inline ptycho::Dataset small_dataset(ptycho::Rng& rng, std::size_t n, std::size_t m,
                                     std::size_t step) {
  std::vector<ptycho::Offset> offs;
  for (std::size_t r = 0; r + m <= n; r += step) {
    for (std::size_t c = 0; c + m <= n; c += step) offs.push_back({r, c});
  }
  ptycho::ScanGeometry g(m, n, offs);
  ComplexField obj = random_smooth_field(rng, n);
  ComplexField probe = random_smooth_field(rng, m);
  auto d = ptycho::measure(probe, obj, g);
  ptycho::Dataset ds{g, d, d, obj, probe, 0.0};
  return ds;
}

}  // namespace testkit
