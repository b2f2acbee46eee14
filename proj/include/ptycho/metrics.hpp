#pragma once

#include "ptycho/field.hpp"

namespace ptycho {

/// || |z| - |z_truth| ||_2
double magnitude_error(const ComplexField& z, const ComplexField& truth);

/// Wrapped phase minus the circular mean (arg of the mean unit phasor),
/// re-wrapped to (-pi, pi]. Zero pixels count with phase 0 but do not vote
/// in the mean; an all-zero field gives zeros.
RealField demean_phase(const ComplexField& z);

struct PhaseRampFit {
  double a = 0.0;  ///< d(phase)/d(col)
  double b = 0.0;  ///< d(phase)/d(row)
  double c = 0.0;  ///< offset, kept in the output
  RealField magnitude;  ///< copied from the input, bit for bit
  RealField phase;      ///< wrapped input phase minus a x + b y, re-wrapped
  ComplexField field;   ///< magnitude * exp(i phase)
};

/// Least-squares plane a x + b y + c through the wrapped phase (no
/// unwrapping), x = column and y = row indices; removes a x + b y only.
/// The fit is repeated on the re-wrapped residual until the slope settles,
/// so applying it twice changes nothing. A single pixel is returned unchanged.
PhaseRampFit remove_phase_ramp(const ComplexField& z);

/// Wraps to (-pi, pi].
double wrap_phase(double phase) noexcept;

}  // namespace ptycho
