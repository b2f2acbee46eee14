#pragma once

#include <span>

#include "ptycho/errors.hpp"
#include "ptycho/field.hpp"
#include "ptycho/pie.hpp"

namespace ptycho {

/// 2x2 block mean. Needs even sides.
template <typename T>
Grid<T> restrict_grid(const Grid<T>& fine) {
  if (fine.rows() % 2 != 0 || fine.cols() % 2 != 0) {
    throw ContractError("restrict: side must be even, got " + std::to_string(fine.rows()) + "x" +
                        std::to_string(fine.cols()));
  }
  Grid<T> coarse(fine.rows() / 2, fine.cols() / 2);
  for (std::size_t r = 0; r < coarse.rows(); ++r) {
    for (std::size_t c = 0; c < coarse.cols(); ++c) {
      const T sum = (fine(2 * r, 2 * c) + fine(2 * r, 2 * c + 1)) +
                    (fine(2 * r + 1, 2 * c) + fine(2 * r + 1, 2 * c + 1));
      coarse(r, c) = sum * 0.25;
    }
  }
  return coarse;
}

/// Piecewise-constant replication onto the doubled grid.
template <typename T>
Grid<T> prolong_grid(const Grid<T>& coarse) {
  Grid<T> fine(coarse.rows() * 2, coarse.cols() * 2);
  for (std::size_t r = 0; r < fine.rows(); ++r) {
    for (std::size_t c = 0; c < fine.cols(); ++c) fine(r, c) = coarse(r / 2, c / 2);
  }
  return fine;
}

struct InterlevelWeights {
  RealField object;       ///< W_z = |Q|^2 / prolong(restrict |Q|^2), fine grid
  ComplexField revised;   ///< W_R = prolong(Q_H) W_z / Q, fine grid
  RealField regularizer;  ///< W_u^H = |Q_H|^2 / restrict |Q|^2, coarse grid
};

/// Weights for the coarse surrogate. 0/0 gives 0 in W_z and W_R, 1 in W_u^H.
/// Throws InternalError if a sup-norm bound (4, 4, 1) is exceeded.
InterlevelWeights build_weights(const ComplexField& probe);

struct CoarseTerms {
  ComplexField probe;     ///< Q_H
  ComplexField patch;     ///< z_H
  ComplexField revised;   ///< R_H
  RealField regularizer;  ///< u_H
  InterlevelWeights weights;
};

CoarseTerms build_coarse_terms(const ComplexField& probe, const ComplexField& patch,
                               const ComplexField& revised, const RealField& u_object);

/// Object step with `levels` coarse corrections before the fine proximal
/// step. levels = 0 is object_step itself; levels = 1 is the two-grid step.
ComplexField magpie_object_step(const ComplexField& probe, const ComplexField& patch,
                                const ComplexField& revised, const RealField& u_object,
                                int levels = 1, double epsilon_floor = 1e-30);

/// prolong(z^_H - z_H), the coarse correction added before the fine step.
ComplexField coarse_correction(const ComplexField& probe, const ComplexField& patch,
                               const ComplexField& revised, const RealField& u_object,
                               int levels = 1, double epsilon_floor = 1e-30);

/// MAGPIE object step, ePIE-type probe step, geometric-mean combination.
/// Needs the probe side divisible by 2^levels.
RegionUpdate emagpie_update_region(const ComplexField& probe, const ComplexField& patch,
                                   const RealField& intensity, const Regularization& reg,
                                   std::span<cplx> phasor, int levels = 1);

/// Throws ContractError unless side is divisible by 2^levels (levels >= 0).
void check_levels(std::size_t side, int levels);

}  // namespace ptycho
