#include "ptycho/pie.hpp"

#include <cmath>

#include "ptycho/forward.hpp"
#include "ptycho/simd.hpp"

namespace ptycho {

void Regularization::validate() const {
  if (!(alpha_object > 0.0)) throw ContractError("regularization: alpha must be > 0");
  if (probe_rule == ProbeRule::rpie && !(alpha_probe > 0.0)) {
    throw ContractError("regularization: probe alpha must be > 0");
  }
  if (!(epsilon_floor > 0.0) || epsilon_floor > 1e-12) {
    throw ContractError("regularization: epsilon floor must lie in (0, 1e-12]");
  }
}

namespace {

RealField ramp(const ComplexField& field, double scale, const char* what) {
  const auto& k = simd::kernels();
  if (k.max_abs2(field.span()) == 0.0) {
    throw ContractError(std::string(what) + ": field is identically zero, regularizer is degenerate");
  }
  RealField out(field.rows(), field.cols());
  k.ramp_regularizer(field.span(), scale, out.span());
  return out;
}

void check_step(const ComplexField& probe, const ComplexField& patch, const ComplexField& revised,
                const RealField& reg) {
  require_same_shape(probe, patch, "step: probe/patch");
  require_same_shape(probe, revised, "step: probe/revised");
  require_same_shape(probe, reg, "step: probe/regularizer");
}

}  // namespace

RealField object_regularizer(const ComplexField& probe, double alpha) {
  return ramp(probe, alpha, "object_regularizer");
}

RealField probe_regularizer(const ComplexField& patch, double scale) {
  return ramp(patch, scale, "probe_regularizer");
}

ComplexField object_step(const ComplexField& probe, const ComplexField& patch,
                         const ComplexField& revised, const RealField& reg, double epsilon_floor) {
  check_step(probe, patch, revised, reg);
  ComplexField out(patch.rows(), patch.cols());
  simd::kernels().proximal_step(patch.span(), probe.span(), revised.span(), reg.span(),
                                epsilon_floor, out.span());
  return out;
}

ComplexField probe_step(const ComplexField& probe, const ComplexField& patch,
                        const ComplexField& revised, const RealField& reg, double epsilon_floor) {
  check_step(probe, patch, revised, reg);
  ComplexField out(probe.rows(), probe.cols());
  simd::kernels().proximal_step(probe.span(), patch.span(), revised.span(), reg.span(),
                                epsilon_floor, out.span());
  return out;
}

ComplexField geometric_mean_aligned(const ComplexField& current, const ComplexField& candidate) {
  require_same_shape(current, candidate, "geometric_mean_aligned");
  ComplexField out(current.rows(), current.cols());
  simd::kernels().geometric_mean(current.span(), candidate.span(), out.span());
  return out;
}

std::size_t count_collapsed(const ComplexField& current, const ComplexField& candidate) {
  require_same_shape(current, candidate, "count_collapsed");
  std::size_t count = 0;
  for (std::size_t i = 0; i < current.size(); ++i) {
    const bool a = current[i] == cplx(0.0, 0.0);
    const bool b = candidate[i] == cplx(0.0, 0.0);
    if (a != b) ++count;
  }
  return count;
}

JointPair joint_combine(const ComplexField& patch, const ComplexField& patch_plus,
                        const ComplexField& probe, const ComplexField& probe_plus) {
  return {geometric_mean_aligned(patch, patch_plus), geometric_mean_aligned(probe, probe_plus)};
}

RegionUpdate joint_update_region(const ComplexField& probe, const ComplexField& patch,
                                 const RealField& intensity, const Regularization& reg,
                                 std::span<cplx> phasor) {
  RegionUpdate out;
  revised_exit_wave_into(probe, patch, intensity, phasor, out.revised);
  const RealField u_object = object_regularizer(probe, reg.alpha_object);
  const RealField u_probe = probe_regularizer(patch, reg.probe_scale());
  const ComplexField patch_plus = object_step(probe, patch, out.revised, u_object, reg.epsilon_floor);
  const ComplexField probe_plus = probe_step(probe, patch, out.revised, u_probe, reg.epsilon_floor);
  out.patch = geometric_mean_aligned(patch, patch_plus);
  out.probe = geometric_mean_aligned(probe, probe_plus);
  return out;
}

RegionUpdate rpie_update_region(const ComplexField& probe, const ComplexField& patch,
                                const RealField& intensity, const Regularization& reg,
                                std::span<cplx> phasor) {
  RegionUpdate out;
  revised_exit_wave_into(probe, patch, intensity, phasor, out.revised);
  const RealField u_object = object_regularizer(probe, reg.alpha_object);
  const RealField u_probe = probe_regularizer(patch, reg.probe_scale());
  out.patch = object_step(probe, patch, out.revised, u_object, reg.epsilon_floor);
  out.probe = probe_step(probe, patch, out.revised, u_probe, reg.epsilon_floor);
  return out;
}

}  // namespace ptycho
