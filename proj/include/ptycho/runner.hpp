#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptycho/field.hpp"
#include "ptycho/forward.hpp"
#include "ptycho/pie.hpp"
#include "ptycho/random.hpp"
#include "ptycho/surrogate.hpp"

namespace ptycho {

enum class Algorithm {
  rpie,        ///< both one-variable minimizers from one residual, no combination
  rpie_joint,  ///< proximal pair combined by the phase-aligned geometric mean
  emagpie,     ///< two-grid (or deeper) object step, then the same combination
};

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

enum class StopReason { none, moving_average, noise_floor, max_iters };

std::string to_string(StopReason r);
StopReason parse_stop_reason(const std::string& name);

struct StopConfig {
  int window = 5;
  int patience = 10;
  long max_iters = 100;
  std::optional<double> noise_floor;
  double floor_factor = 0.9;

  void validate() const;
};

struct SolverConfig {
  Algorithm algorithm = Algorithm::emagpie;
  Regularization reg;
  int levels = 1;  ///< coarse levels for emagpie
  std::uint64_t seed = 0;
  StopConfig stop;
  bool certify = false;
  bool record_time = true;  ///< false writes elapsed = 0 (byte-stable logs)

  void validate(std::size_t probe_side) const;
};

struct MetricSample {
  long iter = 0;
  double residual = 0.0;
  std::optional<double> mag_error;
  double elapsed = 0.0;  ///< seconds since the solver started
  StopReason stop_flag = StopReason::none;
  std::optional<std::string> certification;
};

struct ConvergenceLog {
  std::vector<MetricSample> samples;
  StopReason stop_reason = StopReason::none;
};

struct StopDecision {
  bool stop = false;
  StopReason reason = StopReason::none;
};

/// Moving average over the last w residuals compared with the best earlier
/// average; p consecutive checks without improvement stop the run. Also
/// stops when the latest residual is below floor_factor * noise_floor, or
/// when the latest iter reaches max_iters.
StopDecision should_stop(const ConvergenceLog& log, const StopConfig& stop);

/// Moving averages r_bar_t for t = w .. T (entry i is r_bar at t = w + i).
std::vector<double> moving_averages(const std::vector<double>& residuals, int window);

/// Phi(Q*, z*) on the dataset's (noisy) intensities.
double noise_floor(const Dataset& data);

/// Certification results for one sweep.
struct SweepCertification {
  MajorizationReport majorization;  ///< new iterate against the previous anchors
  AgreementReport agreement;        ///< at the previous anchors' own point
  GradientAgreementReport gradients;
  std::size_t regions = 0;
  std::size_t descent_failures = 0;  ///< asserted regions whose surrogate rose
  double worst_descent = 0.0;        ///< max over regions of (after - before) / max(1, before)
  std::size_t collapsed = 0;         ///< geometric-mean pixels lost to a single zero factor
  bool descent_asserted = false;
  bool ok = true;

  std::string summary() const;
};

class Solver {
 public:
  Solver(const Dataset& data, ComplexField probe, ComplexField object, SolverConfig config);

  /// One pass over a fresh random permutation of the scan positions,
  /// followed by one log sample. Returns the sample.
  const MetricSample& sweep();
  /// Sweeps until should_stop fires; the final sample carries the reason.
  const ConvergenceLog& run();

  const ComplexField& probe() const noexcept { return probe_; }
  const ComplexField& object() const noexcept { return object_; }
  long iter() const noexcept { return iter_; }
  const ConvergenceLog& log() const noexcept { return log_; }
  const PhaseCache& phase_cache() const noexcept { return cache_; }
  const SolverConfig& config() const noexcept { return config_; }
  const std::vector<SweepCertification>& certifications() const noexcept { return certs_; }
  bool certification_ok() const noexcept;

 private:
  RegionUpdate update_region(std::size_t k, const ComplexField& patch, SweepCertification* cert);

  const Dataset& data_;
  ComplexField probe_;
  ComplexField object_;
  SolverConfig config_;
  Rng rng_;
  PhaseCache cache_;
  long iter_ = 0;
  ConvergenceLog log_;
  std::vector<SweepCertification> certs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ptycho
