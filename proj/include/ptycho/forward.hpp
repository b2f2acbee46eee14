#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptycho/field.hpp"

namespace ptycho {

/// Diffraction data for one scan plus, for synthetic runs, the ground truth
/// that produced it.
struct Dataset {
  ScanGeometry geometry;
  std::vector<RealField> intensities;
  std::optional<std::vector<RealField>> clean_intensities;
  std::optional<ComplexField> truth_object;
  std::optional<ComplexField> truth_probe;
  std::optional<double> noise_percent;

  /// Throws ContractError on shape or sign violations.
  void validate() const;
  bool has_truth() const noexcept { return truth_object.has_value() && truth_probe.has_value(); }
};

/// Noiseless intensities |F(Q * P_k z)|^2 for every scan position.
std::vector<RealField> measure(const ComplexField& probe, const ComplexField& object,
                               const ScanGeometry& geometry);

struct RevisedWave {
  ComplexField wave;
  RealField phase;  ///< Fourier phase actually used at each pixel
};

/// Revised exit wave F^-1(sqrt(d) * exp(i theta(F(Q * z_k)))).
///
/// Where a Fourier coefficient is exactly zero, the phase comes from
/// `cached_phase` if given, else 0.
RevisedWave revised_exit_wave(const ComplexField& probe, const ComplexField& patch,
                              const RealField& intensity,
                              const RealField* cached_phase = nullptr);

/// Same computation on caller-owned buffers. `phasor` holds unit phasors,
/// is read at zero coefficients and overwritten with the phasors used; pass
/// an empty span for the stateless rule (phase 0 at zeros).
void revised_exit_wave_into(const ComplexField& probe, const ComplexField& patch,
                            const RealField& intensity, std::span<cplx> phasor,
                            ComplexField& out);

/// Phi_k = 1/2 || Q * z_k - R_k(Q, z_k) ||^2
double misfit_region(const ComplexField& probe, const ComplexField& patch,
                     const RealField& intensity);
/// Phi = sum_k Phi_k over the dataset's scan positions.
double misfit(const ComplexField& probe, const ComplexField& object, const Dataset& data);
std::vector<double> misfit_regions(const ComplexField& probe, const ComplexField& object,
                                   const Dataset& data);

/// CR gradients grad_x + i grad_y with R_k held fixed at the current point.
ComplexField grad_object(const ComplexField& probe, const ComplexField& patch,
                         const RealField& intensity);
ComplexField grad_probe(const ComplexField& probe, const ComplexField& patch,
                        const RealField& intensity);

/// 100 * sqrt(sum ||d_k - clean_k||^2 / sum ||clean_k||^2)
double noise_percent(const std::vector<RealField>& noisy, const std::vector<RealField>& clean);

struct NoiseResult {
  std::vector<RealField> noisy;
  double achieved_percent = 0.0;
  double flux_scale = 0.0;  ///< photons per unit intensity
};

/// Poisson resampling d_k = Poisson(s * clean_k) / s with the flux scale s
/// calibrated so the achieved noise level lands within 5% (relative) of the
/// target. `probes` independent draws are averaged per calibration step.
NoiseResult add_poisson_noise(const std::vector<RealField>& clean, double target_percent,
                              std::uint64_t seed, int probes = 10);

/// One Poisson draw at a fixed flux scale.
std::vector<RealField> poisson_sample(const std::vector<RealField>& clean, double flux_scale,
                                      std::uint64_t seed);

}  // namespace ptycho
