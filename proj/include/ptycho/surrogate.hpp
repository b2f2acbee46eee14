#pragma once

#include <span>
#include <string>
#include <vector>

#include "ptycho/field.hpp"
#include "ptycho/forward.hpp"

namespace ptycho {

/// Per-region memory of the Fourier phase used for the revised exit wave.
///
/// Stored as unit phasors rather than angles: at every visit the phasor of a
/// nonzero coefficient replaces the cached one, and a zero coefficient keeps
/// whatever was cached (phase 0 before the first visit).
class PhaseCache {
 public:
  PhaseCache() = default;
  PhaseCache(std::size_t regions, std::size_t side);

  std::size_t regions() const noexcept { return phasors_.size(); }
  std::span<cplx> phasors(std::size_t k);
  std::span<const cplx> phasors(std::size_t k) const;
  /// Cached phase of region k in (-pi, pi].
  RealField phase(std::size_t k) const;
  /// Iteration of the last visit, -1 if never visited.
  long last_update(std::size_t k) const;
  void mark_visited(std::size_t k, long iter);

  bool operator==(const PhaseCache&) const = default;

 private:
  std::vector<ComplexField> phasors_;
  std::vector<long> last_update_;
};

/// Applies the zero-coefficient phase rule to region k given the current
/// Fourier field F(Q * z_k).
void update_phase_cache(PhaseCache& cache, std::size_t k, const ComplexField& fourier, long iter);

/// R_k frozen at the iterate where the surrogate was built.
struct SurrogateAnchor {
  std::size_t region = 0;
  ComplexField revised;
  double anchor_misfit = 0.0;
};

/// Anchors for every region at (probe, object). With a cache, zero Fourier
/// coefficients take their phase from it (the cache is not modified).
std::vector<SurrogateAnchor> build_anchors(const ComplexField& probe, const ComplexField& object,
                                           const Dataset& data, const PhaseCache* cache = nullptr);

/// 1/2 || Q * z_k - anchor.revised ||^2
double surrogate_value(const ComplexField& probe, const ComplexField& patch,
                       const SurrogateAnchor& anchor);
double surrogate_total(const ComplexField& probe, const ComplexField& object, const Dataset& data,
                       const std::vector<SurrogateAnchor>& anchors);

struct TestPoint {
  ComplexField probe;
  ComplexField object;
};

struct MajorizationReport {
  std::vector<double> margins;  ///< Phi~ - Phi per test point (full sum)
  std::vector<std::vector<double>> region_margins;  ///< per point, per region (reported only)
  double min_margin = 0.0;
  double tolerance = 1e-10;
  bool ok = true;
};

/// Margins Phi~(Q, z; anchors) - Phi(Q, z) at the given points. A point fails
/// when its margin is below -tolerance * max(1, Phi~).
MajorizationReport check_majorization(std::span<const TestPoint> points, const Dataset& data,
                                      const std::vector<SurrogateAnchor>& anchors,
                                      double tolerance = 1e-10);

struct AgreementReport {
  double misfit = 0.0;
  double surrogate = 0.0;
  double gap = 0.0;
  bool ok = true;
};

/// |Phi~ - Phi| at the anchor point, accepted when <= tolerance * (1 + Phi).
AgreementReport check_objective_agreement(const ComplexField& probe, const ComplexField& object,
                                          const Dataset& data,
                                          const std::vector<SurrogateAnchor>& anchors,
                                          double tolerance = 1e-12);

struct RegionGradientCheck {
  std::size_t region = 0;
  bool excluded = false;  ///< a Fourier coefficient of Q * z_k is zero
  double object_deviation = 0.0;
  double probe_deviation = 0.0;
};

struct GradientAgreementReport {
  std::vector<RegionGradientCheck> regions;
  double max_deviation = 0.0;
  double tolerance = 1e-10;
  bool ok = true;
};

/// Compares grad Phi_k (R_k recomputed at the point) with grad Phi~_k (R_k
/// from the anchor) for both variables. Relative deviation per region.
GradientAgreementReport check_gradient_agreement(const ComplexField& probe,
                                                 const ComplexField& object, const Dataset& data,
                                                 const std::vector<SurrogateAnchor>& anchors,
                                                 double tolerance = 1e-10);

/// Entrywise quantities behind the joint-update descent guarantee, evaluated
/// for one region. X = Q z+, Y = Q+ z_k, w = Q~ z~, d = R_k.
struct JointDescentReport {
  double before = 0.0;            ///< Phi~_k(Q, z_k)
  double after = 0.0;             ///< Phi~_k(Q~, z~)
  double one_variable_max = 0.0;  ///< max(Phi~_k(Q+, z_k), Phi~_k(Q, z+)), reported only
  double thales_violation = 0.0;  ///< max(|w - (X+Y)/2| - |X-Y|/2), <= 0 when inside every disk
  double bound_violation = 0.0;   ///< max(|w - d| - max(a, b) |Q z_k - d|)
  bool ok = true;
};

JointDescentReport check_joint_descent(const ComplexField& probe, const ComplexField& patch,
                                       const ComplexField& revised, const RealField& u_object,
                                       const RealField& u_probe, const ComplexField& patch_plus,
                                       const ComplexField& probe_plus,
                                       const ComplexField& patch_new,
                                       const ComplexField& probe_new, double slack = 1e-10);

std::string to_text(const MajorizationReport& report);
std::string to_text(const AgreementReport& report);
std::string to_text(const GradientAgreementReport& report);
std::string to_text(const JointDescentReport& report);

}  // namespace ptycho
