#include "ptycho/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ptycho/simd.hpp"

namespace ptycho {

PhaseCache::PhaseCache(std::size_t regions, std::size_t side)
    : phasors_(regions, ComplexField(side, side, cplx(1.0, 0.0))), last_update_(regions, -1) {}

std::span<cplx> PhaseCache::phasors(std::size_t k) {
  if (k >= phasors_.size()) throw IndexError("phase cache: region out of range");
  return phasors_[k].span();
}

std::span<const cplx> PhaseCache::phasors(std::size_t k) const {
  if (k >= phasors_.size()) throw IndexError("phase cache: region out of range");
  return phasors_[k].span();
}

RealField PhaseCache::phase(std::size_t k) const {
  if (k >= phasors_.size()) throw IndexError("phase cache: region out of range");
  return ptycho::phase(phasors_[k]);
}

long PhaseCache::last_update(std::size_t k) const {
  if (k >= last_update_.size()) throw IndexError("phase cache: region out of range");
  return last_update_[k];
}

void PhaseCache::mark_visited(std::size_t k, long iter) {
  if (k >= last_update_.size()) throw IndexError("phase cache: region out of range");
  last_update_[k] = iter;
}

void update_phase_cache(PhaseCache& cache, std::size_t k, const ComplexField& fourier, long iter) {
  auto ph = cache.phasors(k);
  if (ph.size() != fourier.size()) throw ContractError("update_phase_cache: size mismatch");
  for (std::size_t i = 0; i < ph.size(); ++i) {
    const double n = std::norm(fourier[i]);
    if (n != 0.0) ph[i] = fourier[i] / std::sqrt(n);
  }
  cache.mark_visited(k, iter);
}

std::vector<SurrogateAnchor> build_anchors(const ComplexField& probe, const ComplexField& object,
                                           const Dataset& data, const PhaseCache* cache) {
  if (cache && cache->regions() != data.geometry.count()) {
    throw ContractError("build_anchors: phase cache does not match the scan");
  }
  const auto& kern = simd::kernels();
  std::vector<SurrogateAnchor> anchors(data.geometry.count());
  ComplexField patch;
  ComplexField scratch;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    extract_patch(object, data.geometry, k, patch);
    std::span<cplx> ph;
    if (cache) {
      const auto src = cache->phasors(k);
      scratch = ComplexField(probe.rows(), probe.cols(), std::vector<cplx>(src.begin(), src.end()));
      ph = scratch.span();
    }
    auto& a = anchors[k];
    a.region = k;
    revised_exit_wave_into(probe, patch, data.intensities[k], ph, a.revised);
    a.anchor_misfit = 0.5 * kern.residual_norm2(probe.span(), patch.span(), a.revised.span());
  }
  return anchors;
}

double surrogate_value(const ComplexField& probe, const ComplexField& patch,
                       const SurrogateAnchor& anchor) {
  require_same_shape(probe, patch, "surrogate_value: probe/patch");
  require_same_shape(probe, anchor.revised, "surrogate_value: probe/anchor");
  return 0.5 * simd::kernels().residual_norm2(probe.span(), patch.span(), anchor.revised.span());
}

namespace {

std::vector<double> surrogate_regions(const ComplexField& probe, const ComplexField& object,
                                      const Dataset& data,
                                      const std::vector<SurrogateAnchor>& anchors) {
  if (anchors.size() != data.geometry.count()) {
    throw ContractError("surrogate: anchor count does not match the scan");
  }
  std::vector<double> out(anchors.size());
  ComplexField patch;
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    extract_patch(object, data.geometry, k, patch);
    out[k] = surrogate_value(probe, patch, anchors[k]);
  }
  return out;
}

double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

double surrogate_total(const ComplexField& probe, const ComplexField& object, const Dataset& data,
                       const std::vector<SurrogateAnchor>& anchors) {
  return sum(surrogate_regions(probe, object, data, anchors));
}

MajorizationReport check_majorization(std::span<const TestPoint> points, const Dataset& data,
                                      const std::vector<SurrogateAnchor>& anchors,
                                      double tolerance) {
  MajorizationReport report;
  report.tolerance = tolerance;
  report.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    const auto upper = surrogate_regions(p.probe, p.object, data, anchors);
    const auto exact = misfit_regions(p.probe, p.object, data);
    std::vector<double> margins(upper.size());
    for (std::size_t k = 0; k < upper.size(); ++k) margins[k] = upper[k] - exact[k];
    const double total_upper = sum(upper);
    const double margin = total_upper - sum(exact);
    report.margins.push_back(margin);
    report.region_margins.push_back(std::move(margins));
    report.min_margin = std::min(report.min_margin, margin);
    if (margin < -tolerance * std::max(1.0, total_upper)) report.ok = false;
  }
  if (points.empty()) report.min_margin = 0.0;
  return report;
}

AgreementReport check_objective_agreement(const ComplexField& probe, const ComplexField& object,
                                          const Dataset& data,
                                          const std::vector<SurrogateAnchor>& anchors,
                                          double tolerance) {
  AgreementReport r;
  r.misfit = misfit(probe, object, data);
  r.surrogate = surrogate_total(probe, object, data, anchors);
  r.gap = std::fabs(r.surrogate - r.misfit);
  r.ok = r.gap <= tolerance * (1.0 + r.misfit);
  return r;
}

GradientAgreementReport check_gradient_agreement(const ComplexField& probe,
                                                 const ComplexField& object, const Dataset& data,
                                                 const std::vector<SurrogateAnchor>& anchors,
                                                 double tolerance) {
  if (anchors.size() != data.geometry.count()) {
    throw ContractError("check_gradient_agreement: anchor count does not match the scan");
  }
  GradientAgreementReport report;
  report.tolerance = tolerance;
  ComplexField patch;
  ComplexField fourier;
  const auto deviation = [](const ComplexField& exact, const ComplexField& approx) {
    double diff = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) diff += std::norm(exact[i] - approx[i]);
    const double scale = std::sqrt(norm2_squared(exact.span()));
    return std::sqrt(diff) / std::max(scale, 1.0);
  };
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    extract_patch(object, data.geometry, k, patch);
    RegionGradientCheck check;
    check.region = k;
    fourier = fft2(hadamard(probe, patch));
    check.excluded = std::any_of(fourier.begin(), fourier.end(),
                                 [](cplx v) { return std::norm(v) == 0.0; });
    if (!check.excluded) {
      const auto& d = data.intensities[k];
      const auto& rev = anchors[k].revised;
      ComplexField sur_obj(patch.rows(), patch.cols());
      ComplexField sur_probe(patch.rows(), patch.cols());
      for (std::size_t i = 0; i < patch.size(); ++i) {
        const cplx res = probe[i] * patch[i] - rev[i];
        sur_obj[i] = std::conj(probe[i]) * res;
        sur_probe[i] = std::conj(patch[i]) * res;
      }
      check.object_deviation = deviation(grad_object(probe, patch, d), sur_obj);
      check.probe_deviation = deviation(grad_probe(probe, patch, d), sur_probe);
      report.max_deviation =
          std::max({report.max_deviation, check.object_deviation, check.probe_deviation});
    }
    report.regions.push_back(check);
  }
  report.ok = report.max_deviation < tolerance;
  return report;
}

JointDescentReport check_joint_descent(const ComplexField& probe, const ComplexField& patch,
                                       const ComplexField& revised, const RealField& u_object,
                                       const RealField& u_probe, const ComplexField& patch_plus,
                                       const ComplexField& probe_plus,
                                       const ComplexField& patch_new,
                                       const ComplexField& probe_new, double slack) {
  require_same_shape(probe, patch, "check_joint_descent");
  require_same_shape(probe, revised, "check_joint_descent");
  require_same_shape(probe, u_object, "check_joint_descent");
  require_same_shape(probe, u_probe, "check_joint_descent");
  require_same_shape(probe, patch_plus, "check_joint_descent");
  require_same_shape(probe, probe_plus, "check_joint_descent");
  require_same_shape(probe, patch_new, "check_joint_descent");
  require_same_shape(probe, probe_new, "check_joint_descent");

  JointDescentReport r;
  double one_obj = 0.0;
  double one_probe = 0.0;
  double scale = 0.0;
  r.thales_violation = -std::numeric_limits<double>::infinity();
  r.bound_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const cplx d = revised[i];
    const cplx e = probe[i] * patch[i] - d;
    const cplx x = probe[i] * patch_plus[i];
    const cplx y = probe_plus[i] * patch[i];
    const cplx w = probe_new[i] * patch_new[i];
    r.before += 0.5 * std::norm(e);
    r.after += 0.5 * std::norm(w - d);
    one_obj += 0.5 * std::norm(x - d);
    one_probe += 0.5 * std::norm(y - d);
    scale = std::max({scale, std::abs(d), std::abs(probe[i] * patch[i])});

    r.thales_violation =
        std::max(r.thales_violation, std::abs(w - 0.5 * (x + y)) - 0.5 * std::abs(x - y));
    const double qq = std::norm(probe[i]);
    const double zz = std::norm(patch[i]);
    const double a = qq + u_object[i] > 0.0 ? u_object[i] / (qq + u_object[i]) : 1.0;
    const double b = zz + u_probe[i] > 0.0 ? u_probe[i] / (zz + u_probe[i]) : 1.0;
    r.bound_violation = std::max(r.bound_violation, std::abs(w - d) - std::max(a, b) * std::abs(e));
  }
  if (probe.empty()) {
    r.thales_violation = 0.0;
    r.bound_violation = 0.0;
  }
  r.one_variable_max = std::max(one_obj, one_probe);
  const double tol = slack * std::max(1.0, scale);
  // after <= one_variable_max is not implied: the per-pixel bound uses
  // max(a, b) pixel by pixel, which can exceed both one-variable sums.
  r.ok = r.thales_violation <= tol && r.bound_violation <= tol &&
         r.after <= r.before + slack * std::max(1.0, r.before);
  return r;
}

std::string to_text(const MajorizationReport& report) {
  std::ostringstream os;
  os << "majorization: " << (report.ok ? "ok" : "FAILED") << " over " << report.margins.size()
     << " points, min margin " << report.min_margin;
  return os.str();
}

std::string to_text(const AgreementReport& report) {
  std::ostringstream os;
  os << "agreement: " << (report.ok ? "ok" : "FAILED") << " Phi " << report.misfit << " Phi~ "
     << report.surrogate << " gap " << report.gap;
  return os.str();
}

std::string to_text(const GradientAgreementReport& report) {
  std::size_t excluded = 0;
  for (const auto& r : report.regions) excluded += r.excluded ? 1 : 0;
  std::ostringstream os;
  os << "gradient agreement: " << (report.ok ? "ok" : "FAILED") << " max deviation "
     << report.max_deviation << " (" << excluded << " of " << report.regions.size()
     << " regions excluded for zero Fourier coefficients)";
  return os.str();
}

std::string to_text(const JointDescentReport& report) {
  std::ostringstream os;
  os << "joint descent: " << (report.ok ? "ok" : "FAILED") << " before " << report.before
     << " after " << report.after << " one-variable max " << report.one_variable_max
     << " thales " << report.thales_violation << " bound " << report.bound_violation;
  return os.str();
}

}  // namespace ptycho
