#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ptycho/forward.hpp"
#include "ptycho/io.hpp"
#include "ptycho/simulate.hpp"

namespace ptycho {

/// Everything needed to build one synthetic dataset.
struct SimulationConfig {
  std::size_t n = 512;
  std::size_t m = 128;
  double overlap = 0.75;
  double noise_percent = 0.0;  ///< 0 = noiseless
  std::uint64_t seed = 1;
  std::string magnitude_image = "builtin:texture";  ///< file path or builtin:<name>
  std::string phase_image = "builtin:shapes";
  /// L_s; unset picks the value that makes the defocused beam span
  /// `beam_fill` of the probe window.
  std::optional<double> defocus_offset;
  double beam_fill = 0.5;
  double pixel_size = 0.0;  ///< 0 = zone plate fills half the lens-plane grid
  int calibration_probes = 10;

  void validate() const;
  FzpParams fzp() const;
};

struct SimulationResult {
  Dataset data;
  Provenance provenance;
  std::vector<std::string> warnings;
};

/// Object from images, FZP probe, raster scan, clean intensities and, for a
/// positive noise level, calibrated Poisson noise.
SimulationResult simulate_dataset(const SimulationConfig& config);

/// Loads `spec` (file path or builtin:<name>) and resamples it to side x side.
RealField load_image_spec(const std::string& spec, std::size_t side);

enum class ProbeInit { perturb, fzp, truth };
ProbeInit parse_probe_init(const std::string& name);

struct InitialGuess {
  ComplexField probe;
  ComplexField object;
};

/// Probe: perturbed truth (needs truth), fresh FZP model, or the truth itself;
/// always rescaled to dp_avg. Object: ones plus optional noise.
InitialGuess make_initial_guess(const Dataset& data, ProbeInit probe_init, std::uint64_t seed,
                                double object_noise = 0.0,
                                const ProbePerturbation& perturbation = {},
                                const FzpParams* fzp = nullptr);

}  // namespace ptycho
