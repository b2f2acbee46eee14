#pragma once

#include <span>

#include "ptycho/field.hpp"

namespace ptycho {

enum class ProbeRule {
  epie,  ///< u_z = ||z_k||_inf^2 - |z_k|^2
  rpie,  ///< u_z = alpha_probe * (||z_k||_inf^2 - |z_k|^2)
};

struct Regularization {
  double alpha_object = 0.05;  ///< alpha in u_Q = alpha (||Q||_inf^2 - |Q|^2)
  ProbeRule probe_rule = ProbeRule::epie;
  double alpha_probe = 1.0;  ///< used only with ProbeRule::rpie
  double epsilon_floor = 1e-30;

  void validate() const;
  double probe_scale() const noexcept { return probe_rule == ProbeRule::epie ? 1.0 : alpha_probe; }
};

/// u_Q(Q) = alpha (||Q||_inf^2 - |Q|^2). Throws ContractError for an all-zero probe.
RealField object_regularizer(const ComplexField& probe, double alpha);
/// u_z(z_k) = scale (||z_k||_inf^2 - |z_k|^2). Throws ContractError for an all-zero patch.
RealField probe_regularizer(const ComplexField& patch, double scale = 1.0);

/// Closed-form minimizer over z_k of the surrogate plus 1/2 <u, |z_k - z_j|^2>:
///   z+ = z_k + conj(Q) / (u + |Q|^2) * (R_k - Q z_k)
ComplexField object_step(const ComplexField& probe, const ComplexField& patch,
                         const ComplexField& revised, const RealField& reg,
                         double epsilon_floor = 1e-30);
/// Mirror image of object_step for the probe:
///   Q+ = Q + conj(z_k) / (u + |z_k|^2) * (R_k - Q z_k)
ComplexField probe_step(const ComplexField& probe, const ComplexField& patch,
                        const ComplexField& revised, const RealField& reg,
                        double epsilon_floor = 1e-30);

/// Elementwise square root of current * candidate on the branch within
/// pi/2 of `current` (principal root on ties, 0 where the product is 0).
ComplexField geometric_mean_aligned(const ComplexField& current, const ComplexField& candidate);

/// Pixels where exactly one factor of the geometric mean is zero (the
/// combined value collapses to 0 there and the update is lost).
std::size_t count_collapsed(const ComplexField& current, const ComplexField& candidate);

struct JointPair {
  ComplexField patch;
  ComplexField probe;
};

JointPair joint_combine(const ComplexField& patch, const ComplexField& patch_plus,
                        const ComplexField& probe, const ComplexField& probe_plus);

/// Result of one region visit. `revised` is R_k at the incoming iterate, the
/// anchor of the sampled surrogate.
struct RegionUpdate {
  ComplexField probe;
  ComplexField patch;
  ComplexField revised;
};

/// Proximal joint update: R_k once, z+ with u_Q, Q+ with u_z, geometric-mean
/// combination. `phasor` is the region's phase cache (may be empty).
RegionUpdate joint_update_region(const ComplexField& probe, const ComplexField& patch,
                                 const RealField& intensity, const Regularization& reg,
                                 std::span<cplx> phasor);

/// Plain rPIE: both one-variable minimizers taken from the same residual and
/// accepted as they are.
RegionUpdate rpie_update_region(const ComplexField& probe, const ComplexField& patch,
                                const RealField& intensity, const Regularization& reg,
                                std::span<cplx> phasor);

}  // namespace ptycho
