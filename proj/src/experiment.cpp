#include "ptycho/experiment.hpp"

#include <cmath>
#include <sstream>

#include "ptycho/random.hpp"

namespace ptycho {

namespace {

// Stream ids for mix_seed so each random ingredient gets its own sequence.
enum Stream : std::uint64_t { noise_stream = 1, probe_stream = 2, object_stream = 3 };

std::string number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void SimulationConfig::validate() const {
  if (m < 2 || m % 2 != 0) throw ConfigError("simulate: m must be even and >= 2");
  if (n < m) throw ConfigError("simulate: n must be >= m");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("simulate: overlap must lie in [0, 1)");
  if (std::round((1.0 - overlap) * static_cast<double>(m)) < 1.0) {
    throw ConfigError("simulate: overlap too close to 1, scan step rounds to zero");
  }
  if (!(noise_percent >= 0.0)) throw ConfigError("simulate: noise percent must be >= 0");
  if (!(beam_fill > 0.0 && beam_fill < 1.0)) throw ConfigError("simulate: beam fill must lie in (0, 1)");
  if (calibration_probes < 1) throw ConfigError("simulate: calibration probes must be >= 1");
  try {
    fzp().validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("simulate: ") + e.what());
  }
}

FzpParams SimulationConfig::fzp() const {
  FzpParams p = fzp_for_window(m, beam_fill);
  if (defocus_offset) p.defocus_offset = *defocus_offset;
  p.pixel_size = pixel_size;
  return p;
}

RealField load_image_spec(const std::string& spec, std::size_t side) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) {
    try {
      return builtin_image(spec.substr(prefix.size()), side);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
  return resample(read_image(spec), side, side);
}

SimulationResult simulate_dataset(const SimulationConfig& config) {
  config.validate();
  SimulationResult out;
  const RealField mag = load_image_spec(config.magnitude_image, config.n);
  const RealField phase = load_image_spec(config.phase_image, config.n);
  ComplexField object;
  try {
    object = make_object(mag, phase);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  const FzpParams fzp = config.fzp();
  FzpProbe probe = make_fzp_probe(fzp);
  out.warnings = probe.warnings;
  const ScanGeometry geometry = make_scan_grid(config.n, config.m, config.overlap);
  auto clean = measure(probe.probe, object, geometry);

  std::vector<RealField> noisy = clean;
  double achieved = 0.0;
  double flux = 0.0;
  if (config.noise_percent > 0.0) {
    NoiseResult nr = add_poisson_noise(clean, config.noise_percent, mix_seed(config.seed, noise_stream),
                                       config.calibration_probes);
    noisy = std::move(nr.noisy);
    achieved = nr.achieved_percent;
    flux = nr.flux_scale;
  }
  out.data = Dataset{geometry, std::move(noisy), std::move(clean), std::move(object),
                     std::move(probe.probe), achieved};
  out.provenance = {
      {"generator", "ptycho simulate"},
      {"n", std::to_string(config.n)},
      {"m", std::to_string(config.m)},
      {"overlap", number(config.overlap)},
      {"noise_target_percent", number(config.noise_percent)},
      {"noise_achieved_percent", number(achieved)},
      {"flux_scale", number(flux)},
      {"seed", std::to_string(config.seed)},
      {"magnitude_image", config.magnitude_image},
      {"phase_image", config.phase_image},
      {"fzp_defocus_offset_m", number(fzp.defocus_offset)},
      {"fzp_pixel_size_m", number(fzp.effective_pixel_size())},
      {"fzp_lens_plane_pixel_m", number(probe.lens_plane_pixel)},
  };
  return out;
}

ProbeInit parse_probe_init(const std::string& name) {
  if (name == "perturb") return ProbeInit::perturb;
  if (name == "fzp") return ProbeInit::fzp;
  if (name == "truth") return ProbeInit::truth;
  throw ConfigError("unknown probe init '" + name + "' (expected perturb, fzp or truth)");
}

InitialGuess make_initial_guess(const Dataset& data, ProbeInit probe_init, std::uint64_t seed,
                                double object_noise, const ProbePerturbation& perturbation,
                                const FzpParams* fzp) {
  const std::size_t m = data.geometry.probe_side();
  ComplexField probe;
  switch (probe_init) {
    case ProbeInit::perturb:
      if (!data.truth_probe) throw ConfigError("probe init 'perturb' needs a dataset with a true probe");
      probe = perturb_probe(*data.truth_probe, perturbation, mix_seed(seed, probe_stream));
      break;
    case ProbeInit::truth:
      if (!data.truth_probe) throw ConfigError("probe init 'truth' needs a dataset with a true probe");
      probe = *data.truth_probe;
      break;
    case ProbeInit::fzp: {
      FzpParams p = fzp ? *fzp : fzp_for_window(m);
      p.grid_side = m;
      probe = make_fzp_probe(p).probe;
      break;
    }
  }
  InitialGuess g;
  g.probe = normalize_probe(probe, data.intensities);
  g.object = init_object_constant(data.geometry.object_side(), object_noise, mix_seed(seed, object_stream));
  return g;
}

}  // namespace ptycho
