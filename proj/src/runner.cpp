#include "ptycho/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ptycho/metrics.hpp"
#include "ptycho/multigrid.hpp"

namespace ptycho {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::rpie: return "rpie";
    case Algorithm::rpie_joint: return "rpie-joint";
    case Algorithm::emagpie: return "emagpie";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "rpie") return Algorithm::rpie;
  if (name == "rpie-joint") return Algorithm::rpie_joint;
  if (name == "emagpie") return Algorithm::emagpie;
  throw ConfigError("unknown algorithm '" + name + "' (expected rpie, rpie-joint or emagpie)");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::moving_average: return "moving_average";
    case StopReason::noise_floor: return "noise_floor";
    case StopReason::max_iters: return "max_iters";
  }
  return "?";
}

StopReason parse_stop_reason(const std::string& name) {
  if (name == "none" || name.empty()) return StopReason::none;
  if (name == "moving_average") return StopReason::moving_average;
  if (name == "noise_floor") return StopReason::noise_floor;
  if (name == "max_iters") return StopReason::max_iters;
  throw DataError("unknown stop flag '" + name + "'");
}

void StopConfig::validate() const {
  if (window < 1) throw ConfigError("stop: window must be >= 1");
  if (patience < 1) throw ConfigError("stop: patience must be >= 1");
  if (max_iters < 1) throw ConfigError("stop: max_iters must be >= 1");
  if (!(floor_factor > 0.0 && floor_factor <= 1.0)) throw ConfigError("stop: floor factor must lie in (0, 1]");
  if (noise_floor && !(*noise_floor >= 0.0)) throw ConfigError("stop: noise floor must be >= 0");
}

void SolverConfig::validate(std::size_t probe_side) const {
  stop.validate();
  try {
    reg.validate();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (algorithm == Algorithm::emagpie) {
    try {
      check_levels(probe_side, levels);
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
}

std::vector<double> moving_averages(const std::vector<double>& residuals, int window) {
  std::vector<double> out;
  const auto w = static_cast<std::size_t>(window);
  if (window < 1 || residuals.size() < w) return out;
  for (std::size_t t = w; t <= residuals.size(); ++t) {
    double s = 0.0;
    for (std::size_t i = t - w; i < t; ++i) s += residuals[i];
    out.push_back(s / static_cast<double>(w));
  }
  return out;
}

StopDecision should_stop(const ConvergenceLog& log, const StopConfig& stop) {
  if (log.samples.empty()) return {};
  const MetricSample& last = log.samples.back();
  if (stop.noise_floor && last.residual < stop.floor_factor * *stop.noise_floor) {
    return {true, StopReason::noise_floor};
  }
  std::vector<double> residuals;
  residuals.reserve(log.samples.size());
  for (const auto& s : log.samples) residuals.push_back(s.residual);
  const auto avg = moving_averages(residuals, stop.window);
  // avg[0] seeds the best value; every later average is one check.
  int stale = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < avg.size(); ++i) {
    if (i > 0) {
      if (avg[i] >= best) {
        ++stale;
      } else {
        stale = 0;
      }
    }
    best = std::min(best, avg[i]);
  }
  if (stale >= stop.patience) return {true, StopReason::moving_average};
  if (last.iter >= stop.max_iters) return {true, StopReason::max_iters};
  return {};
}

double noise_floor(const Dataset& data) {
  if (!data.has_truth()) throw ContractError("noise_floor: dataset carries no ground truth");
  return misfit(*data.truth_probe, *data.truth_object, data);
}

std::string SweepCertification::summary() const {
  std::ostringstream os;
  os << (ok ? "ok" : "FAIL") << " maj=" << majorization.min_margin << " gap=" << agreement.gap
     << " grad=" << gradients.max_deviation << " descent=" << (regions - descent_failures) << "/"
     << regions << (descent_asserted ? "" : "(measured)") << " worst=" << worst_descent;
  if (collapsed > 0) os << " collapsed=" << collapsed;
  return os.str();
}

Solver::Solver(const Dataset& data, ComplexField probe, ComplexField object, SolverConfig config)
    : data_(data),
      probe_(std::move(probe)),
      object_(std::move(object)),
      config_(std::move(config)),
      rng_(config_.seed),
      cache_(data.geometry.count(), data.geometry.probe_side()),
      start_(std::chrono::steady_clock::now()) {
  data_.validate();
  const std::size_t m = data_.geometry.probe_side();
  const std::size_t n = data_.geometry.object_side();
  if (probe_.rows() != m || probe_.cols() != m) throw ContractError("solver: probe shape does not match the scan");
  if (object_.rows() != n || object_.cols() != n) throw ContractError("solver: object shape does not match the scan");
  config_.validate(m);
}

RegionUpdate Solver::update_region(std::size_t k, const ComplexField& patch, SweepCertification* cert) {
  const RealField& d = data_.intensities[k];
  auto phasor = cache_.phasors(k);
  const auto& reg = config_.reg;
  if (!cert) {
    switch (config_.algorithm) {
      case Algorithm::rpie: return rpie_update_region(probe_, patch, d, reg, phasor);
      case Algorithm::rpie_joint: return joint_update_region(probe_, patch, d, reg, phasor);
      case Algorithm::emagpie: return emagpie_update_region(probe_, patch, d, reg, phasor, config_.levels);
    }
  }

  // Same arithmetic as the region functions above, kept in pieces so the
  // one-variable candidates are available to the checks.
  RegionUpdate out;
  revised_exit_wave_into(probe_, patch, d, phasor, out.revised);
  const RealField u_object = object_regularizer(probe_, reg.alpha_object);
  const RealField u_probe = probe_regularizer(patch, reg.probe_scale());
  const int levels = config_.algorithm == Algorithm::emagpie ? config_.levels : 0;
  const ComplexField patch_plus =
      magpie_object_step(probe_, patch, out.revised, u_object, levels, reg.epsilon_floor);
  const ComplexField probe_plus = probe_step(probe_, patch, out.revised, u_probe, reg.epsilon_floor);
  if (config_.algorithm == Algorithm::rpie) {
    out.patch = patch_plus;
    out.probe = probe_plus;
  } else {
    out.patch = geometric_mean_aligned(patch, patch_plus);
    out.probe = geometric_mean_aligned(probe_, probe_plus);
    cert->collapsed += count_collapsed(patch, patch_plus) + count_collapsed(probe_, probe_plus);
  }

  SurrogateAnchor anchor{k, out.revised, 0.0};
  const double before = surrogate_value(probe_, patch, anchor);
  const double after = surrogate_value(out.probe, out.patch, anchor);
  const double rise = (after - before) / std::max(1.0, before);
  cert->regions += 1;
  cert->worst_descent = cert->regions == 1 ? rise : std::max(cert->worst_descent, rise);

  bool region_ok = true;
  if (config_.algorithm != Algorithm::rpie && levels == 0) {
    const auto report = check_joint_descent(probe_, patch, out.revised, u_object, u_probe, patch_plus,
                                            probe_plus, out.patch, out.probe);
    region_ok = report.ok;
  } else if (config_.algorithm == Algorithm::emagpie) {
    region_ok = rise <= 1e-10;
  }
  if (!region_ok) cert->descent_failures += 1;
  return out;
}

const MetricSample& Solver::sweep() {
  const bool certify = config_.certify;
  std::vector<SurrogateAnchor> anchors;
  ComplexField anchor_probe;
  ComplexField anchor_object;
  if (certify) {
    anchors = build_anchors(probe_, object_, data_, &cache_);
    anchor_probe = probe_;
    anchor_object = object_;
  }
  SweepCertification cert;
  cert.descent_asserted = config_.algorithm != Algorithm::rpie;

  const auto order = rng_.permutation(data_.geometry.count());
  ComplexField patch;
  for (std::size_t k : order) {
    extract_patch(object_, data_.geometry, k, patch);
    RegionUpdate u = update_region(k, patch, certify ? &cert : nullptr);
    scatter_patch(object_, u.patch, data_.geometry, k);
    probe_ = std::move(u.probe);
    cache_.mark_visited(k, iter_);
  }
  ++iter_;

  MetricSample s;
  s.iter = iter_;
  s.residual = misfit(probe_, object_, data_);
  if (data_.truth_object) s.mag_error = magnitude_error(object_, *data_.truth_object);

  if (certify) {
    const TestPoint point{probe_, object_};
    cert.majorization = check_majorization(std::span<const TestPoint>(&point, 1), data_, anchors);
    cert.agreement = check_objective_agreement(anchor_probe, anchor_object, data_, anchors);
    cert.gradients = check_gradient_agreement(anchor_probe, anchor_object, data_, anchors);
    cert.ok = cert.majorization.ok && cert.agreement.ok && cert.gradients.ok &&
              (!cert.descent_asserted || cert.descent_failures == 0);
    s.certification = cert.summary();
    certs_.push_back(std::move(cert));
  }
  s.elapsed = config_.record_time
                  ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()
                  : 0.0;
  log_.samples.push_back(std::move(s));
  return log_.samples.back();
}

const ConvergenceLog& Solver::run() {
  while (true) {
    sweep();
    const StopDecision d = should_stop(log_, config_.stop);
    if (d.stop) {
      log_.samples.back().stop_flag = d.reason;
      log_.stop_reason = d.reason;
      break;
    }
  }
  return log_;
}

bool Solver::certification_ok() const noexcept {
  return std::all_of(certs_.begin(), certs_.end(), [](const auto& c) { return c.ok; });
}

}  // namespace ptycho
