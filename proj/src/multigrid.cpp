#include "ptycho/multigrid.hpp"

#include <cmath>

#include "ptycho/forward.hpp"
#include "ptycho/simd.hpp"

namespace ptycho {

void check_levels(std::size_t side, int levels) {
  if (levels < 0) throw ContractError("multigrid: levels must be >= 0");
  if (levels > 30 || side % (std::size_t{1} << levels) != 0) {
    throw ContractError("multigrid: side " + std::to_string(side) + " is not divisible by 2^" +
                        std::to_string(levels));
  }
}

InterlevelWeights build_weights(const ComplexField& probe) {
  const RealField q2 = abs2(probe);
  const RealField q2_coarse = restrict_grid(q2);
  const RealField q2_avg = prolong_grid(q2_coarse);
  const ComplexField q_coarse = restrict_grid(probe);
  const ComplexField q_coarse_fine = prolong_grid(q_coarse);

  InterlevelWeights w;
  w.object = RealField(probe.rows(), probe.cols());
  w.revised = ComplexField(probe.rows(), probe.cols());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    // q2[i] > 0 implies q2_avg[i] > 0, so the guard only fires on 0/0.
    w.object[i] = q2[i] > 0.0 ? q2[i] / q2_avg[i] : 0.0;
    w.revised[i] = probe[i] != cplx(0.0, 0.0) ? q_coarse_fine[i] * w.object[i] / probe[i] : cplx(0.0);
  }
  w.regularizer = RealField(q_coarse.rows(), q_coarse.cols());
  for (std::size_t i = 0; i < q_coarse.size(); ++i) {
    w.regularizer[i] = q2_coarse[i] > 0.0 ? std::norm(q_coarse[i]) / q2_coarse[i] : 1.0;
  }

  // Rounding can push a ratio a few ulps past its bound.
  constexpr double slack = 1e-12;
  for (double v : w.object) {
    if (!(v <= 4.0 + slack)) throw InternalError("multigrid: |W_z| exceeds 4");
  }
  for (cplx v : w.revised) {
    if (!(std::abs(v) <= 4.0 + slack)) throw InternalError("multigrid: |W_R| exceeds 4");
  }
  for (double v : w.regularizer) {
    if (!(v <= 1.0 + slack)) throw InternalError("multigrid: |W_u| exceeds 1");
  }
  return w;
}

CoarseTerms build_coarse_terms(const ComplexField& probe, const ComplexField& patch,
                               const ComplexField& revised, const RealField& u_object) {
  require_same_shape(probe, patch, "build_coarse_terms: probe/patch");
  require_same_shape(probe, revised, "build_coarse_terms: probe/revised");
  require_same_shape(probe, u_object, "build_coarse_terms: probe/regularizer");
  CoarseTerms t;
  t.weights = build_weights(probe);
  t.probe = restrict_grid(probe);

  ComplexField weighted(patch.rows(), patch.cols());
  for (std::size_t i = 0; i < patch.size(); ++i) weighted[i] = t.weights.object[i] * patch[i];
  t.patch = restrict_grid(weighted);
  for (std::size_t i = 0; i < revised.size(); ++i) weighted[i] = t.weights.revised[i] * revised[i];
  t.revised = restrict_grid(weighted);

  t.regularizer = restrict_grid(u_object);
  for (std::size_t i = 0; i < t.regularizer.size(); ++i) {
    t.regularizer[i] *= t.weights.regularizer[i];
  }
  return t;
}

ComplexField coarse_correction(const ComplexField& probe, const ComplexField& patch,
                               const ComplexField& revised, const RealField& u_object, int levels,
                               double epsilon_floor) {
  check_levels(probe.rows(), levels);
  if (levels == 0) return ComplexField(patch.rows(), patch.cols());
  const CoarseTerms t = build_coarse_terms(probe, patch, revised, u_object);
  const ComplexField solved =
      magpie_object_step(t.probe, t.patch, t.revised, t.regularizer, levels - 1, epsilon_floor);
  ComplexField delta(solved.rows(), solved.cols());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = solved[i] - t.patch[i];
  return prolong_grid(delta);
}

ComplexField magpie_object_step(const ComplexField& probe, const ComplexField& patch,
                                const ComplexField& revised, const RealField& u_object, int levels,
                                double epsilon_floor) {
  check_levels(probe.rows(), levels);
  if (levels == 0) return object_step(probe, patch, revised, u_object, epsilon_floor);
  ComplexField shifted = coarse_correction(probe, patch, revised, u_object, levels, epsilon_floor);
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += patch[i];
  return object_step(probe, shifted, revised, u_object, epsilon_floor);
}

RegionUpdate emagpie_update_region(const ComplexField& probe, const ComplexField& patch,
                                   const RealField& intensity, const Regularization& reg,
                                   std::span<cplx> phasor, int levels) {
  check_levels(probe.rows(), levels);
  RegionUpdate out;
  revised_exit_wave_into(probe, patch, intensity, phasor, out.revised);
  const RealField u_object = object_regularizer(probe, reg.alpha_object);
  const RealField u_probe = probe_regularizer(patch, reg.probe_scale());
  const ComplexField patch_plus =
      magpie_object_step(probe, patch, out.revised, u_object, levels, reg.epsilon_floor);
  const ComplexField probe_plus = probe_step(probe, patch, out.revised, u_probe, reg.epsilon_floor);
  out.patch = geometric_mean_aligned(patch, patch_plus);
  out.probe = geometric_mean_aligned(probe, probe_plus);
  return out;
}

}  // namespace ptycho
