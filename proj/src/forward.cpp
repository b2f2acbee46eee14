#include "ptycho/forward.hpp"

#include <algorithm>
#include <cmath>

#include "ptycho/random.hpp"
#include "ptycho/simd.hpp"

namespace ptycho {

void Dataset::validate() const {
  const std::size_t m = geometry.probe_side();
  if (intensities.size() != geometry.count()) {
    throw ContractError("dataset: " + std::to_string(intensities.size()) + " frames for " +
                        std::to_string(geometry.count()) + " scan positions");
  }
  auto check_frames = [&](const std::vector<RealField>& frames, const char* what) {
    for (const auto& d : frames) {
      if (d.rows() != m || d.cols() != m) {
        throw ContractError(std::string("dataset: ") + what + " frame has wrong shape");
      }
      for (double v : d) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw ContractError(std::string("dataset: ") + what + " contains negative or non-finite values");
        }
      }
    }
  };
  check_frames(intensities, "intensity");
  if (clean_intensities) {
    if (clean_intensities->size() != intensities.size()) {
      throw ContractError("dataset: clean intensities count differs from intensities");
    }
    check_frames(*clean_intensities, "clean intensity");
  }
  const std::size_t n = geometry.object_side();
  if (truth_object && (truth_object->rows() != n || truth_object->cols() != n)) {
    throw ContractError("dataset: truth object shape does not match geometry");
  }
  if (truth_probe && (truth_probe->rows() != m || truth_probe->cols() != m)) {
    throw ContractError("dataset: truth probe shape does not match geometry");
  }
}

namespace {

void check_region(const ComplexField& probe, const ComplexField& patch, const RealField& intensity) {
  if (!probe.is_square()) throw ContractError("probe must be square");
  require_same_shape(probe, patch, "probe/patch");
  require_same_shape(probe, intensity, "probe/intensity");
}

void check_intensity(const RealField& intensity) {
  for (double v : intensity) {
    if (!(v >= 0.0)) throw ContractError("intensity has negative or NaN entries");
  }
}

}  // namespace

std::vector<RealField> measure(const ComplexField& probe, const ComplexField& object,
                               const ScanGeometry& geometry) {
  const std::size_t m = geometry.probe_side();
  if (probe.rows() != m || probe.cols() != m) {
    throw ContractError("measure: probe shape does not match geometry");
  }
  const auto& k = simd::kernels();
  std::vector<RealField> out;
  out.reserve(geometry.count());
  ComplexField patch;
  ComplexField exit(m, m);
  for (std::size_t i = 0; i < geometry.count(); ++i) {
    extract_patch(object, geometry, i, patch);
    k.multiply(probe.span(), patch.span(), exit.span());
    fft2_inplace(exit);
    RealField d(m, m);
    k.abs2(exit.span(), d.span());
    out.push_back(std::move(d));
  }
  return out;
}

void revised_exit_wave_into(const ComplexField& probe, const ComplexField& patch,
                            const RealField& intensity, std::span<cplx> phasor,
                            ComplexField& out) {
  check_region(probe, patch, intensity);
  if (!phasor.empty() && phasor.size() != probe.size()) {
    throw ContractError("revised_exit_wave: phase cache has wrong size");
  }
  const auto& k = simd::kernels();
  if (!out.same_shape(probe)) out = ComplexField(probe.rows(), probe.cols());
  k.multiply(probe.span(), patch.span(), out.span());
  fft2_inplace(out);
  k.project_modulus(out.span(), intensity.span(), phasor);
  ifft2_inplace(out);
}

RevisedWave revised_exit_wave(const ComplexField& probe, const ComplexField& patch,
                              const RealField& intensity, const RealField* cached_phase) {
  check_region(probe, patch, intensity);
  check_intensity(intensity);
  ComplexField phasor(probe.rows(), probe.cols(), cplx(1.0, 0.0));
  if (cached_phase) {
    require_same_shape(probe, *cached_phase, "revised_exit_wave: cached phase");
    for (std::size_t i = 0; i < phasor.size(); ++i) phasor[i] = std::polar(1.0, (*cached_phase)[i]);
  }
  RevisedWave result;
  revised_exit_wave_into(probe, patch, intensity, phasor.span(), result.wave);
  result.phase = phase(phasor);
  return result;
}

double misfit_region(const ComplexField& probe, const ComplexField& patch,
                     const RealField& intensity) {
  ComplexField revised;
  revised_exit_wave_into(probe, patch, intensity, {}, revised);
  return 0.5 * simd::kernels().residual_norm2(probe.span(), patch.span(), revised.span());
}

std::vector<double> misfit_regions(const ComplexField& probe, const ComplexField& object,
                                   const Dataset& data) {
  std::vector<double> values(data.geometry.count());
  ComplexField patch;
  ComplexField revised;
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < values.size(); ++i) {
    extract_patch(object, data.geometry, i, patch);
    revised_exit_wave_into(probe, patch, data.intensities[i], {}, revised);
    values[i] = 0.5 * k.residual_norm2(probe.span(), patch.span(), revised.span());
  }
  return values;
}

double misfit(const ComplexField& probe, const ComplexField& object, const Dataset& data) {
  double total = 0.0;
  for (double v : misfit_regions(probe, object, data)) total += v;
  return total;
}

namespace {

// conj(a) * (Q * z_k - R)
ComplexField gradient(const ComplexField& probe, const ComplexField& patch,
                      const RealField& intensity, const ComplexField& conj_factor) {
  ComplexField revised;
  revised_exit_wave_into(probe, patch, intensity, {}, revised);
  ComplexField out(probe.rows(), probe.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::conj(conj_factor[i]) * (probe[i] * patch[i] - revised[i]);
  }
  return out;
}

}  // namespace

ComplexField grad_object(const ComplexField& probe, const ComplexField& patch,
                         const RealField& intensity) {
  return gradient(probe, patch, intensity, probe);
}

ComplexField grad_probe(const ComplexField& probe, const ComplexField& patch,
                        const RealField& intensity) {
  return gradient(probe, patch, intensity, patch);
}

double noise_percent(const std::vector<RealField>& noisy, const std::vector<RealField>& clean) {
  if (noisy.size() != clean.size()) throw ContractError("noise_percent: frame count mismatch");
  double residual = 0.0;
  double signal = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    require_same_shape(noisy[k], clean[k], "noise_percent");
    for (std::size_t i = 0; i < clean[k].size(); ++i) {
      const double n = noisy[k][i] - clean[k][i];
      residual += n * n;
      signal += clean[k][i] * clean[k][i];
    }
  }
  if (signal == 0.0) throw ContractError("noise_percent: clean intensities are all zero");
  return 100.0 * std::sqrt(residual / signal);
}

std::vector<RealField> poisson_sample(const std::vector<RealField>& clean, double flux_scale,
                                      std::uint64_t seed) {
  if (!(flux_scale > 0.0)) throw ContractError("poisson_sample: flux scale must be positive");
  Rng rng(seed);
  std::vector<RealField> out;
  out.reserve(clean.size());
  for (const auto& frame : clean) {
    RealField d(frame.rows(), frame.cols());
    for (std::size_t i = 0; i < frame.size(); ++i) {
      d[i] = static_cast<double>(rng.poisson(flux_scale * frame[i])) / flux_scale;
    }
    out.push_back(std::move(d));
  }
  return out;
}

NoiseResult add_poisson_noise(const std::vector<RealField>& clean, double target_percent,
                              std::uint64_t seed, int probes) {
  if (!(target_percent > 0.0)) throw ContractError("add_poisson_noise: target must be > 0");
  if (probes < 1) throw ContractError("add_poisson_noise: need at least one probe draw");
  double total = 0.0;
  double total_sq = 0.0;
  for (const auto& frame : clean) {
    for (double v : frame) {
      if (!(v >= 0.0)) throw ContractError("add_poisson_noise: clean data must be >= 0");
      total += v;
      total_sq += v * v;
    }
  }
  if (total_sq == 0.0) {
    throw CalibrationError("add_poisson_noise: clean intensities are all zero, no noise level is reachable");
  }

  // Var[Poisson(s d)/s] = d / s, so noise% ~ 100 sqrt(sum d / (s sum d^2)).
  // That fixes a starting flux and the local slope d log(noise) / d log(s) = -1/2;
  // the search below keeps a bracket on log s and bisects whenever the
  // power-law step leaves it. Draws reuse the same seeds at every s.
  const double t = target_percent / 100.0;
  const auto evaluate = [&](double s) {
    double sum = 0.0;
    for (int p = 0; p < probes; ++p) {
      sum += noise_percent(poisson_sample(clean, s, mix_seed(seed, static_cast<std::uint64_t>(p))), clean);
    }
    return sum / probes;
  };
  double x = std::log(total / (total_sq * t * t));
  double lo = x - std::log(1e6);
  double hi = x + std::log(1e6);
  for (int iter = 0; iter < 60; ++iter) {
    const double f = evaluate(std::exp(x));
    if (std::fabs(f / target_percent - 1.0) < 0.002) break;
    if (f > target_percent) {
      lo = x;
    } else {
      hi = x;
    }
    double next = x + 2.0 * std::log(f / target_percent);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }

  NoiseResult result;
  result.flux_scale = std::exp(x);
  result.noisy = poisson_sample(clean, result.flux_scale, mix_seed(seed, 0));
  result.achieved_percent = noise_percent(result.noisy, clean);
  if (std::fabs(result.achieved_percent / target_percent - 1.0) > 0.05) {
    throw CalibrationError("add_poisson_noise: achieved " + std::to_string(result.achieved_percent) +
                           "% for a target of " + std::to_string(target_percent) +
                           "% (dataset too small for a stable noise level)");
  }
  return result;
}

}  // namespace ptycho
