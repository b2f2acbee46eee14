#include "ptycho/metrics.hpp"

#include <cmath>
#include <numbers>

namespace ptycho {

double wrap_phase(double phase) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(phase, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

double magnitude_error(const ComplexField& z, const ComplexField& truth) {
  require_same_shape(z, truth, "magnitude_error");
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = std::abs(z[i]) - std::abs(truth[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

RealField demean_phase(const ComplexField& z) {
  RealField out(z.rows(), z.cols());
  cplx mean(0.0, 0.0);
  for (cplx v : z) {
    const double a = std::abs(v);
    if (a > 0.0) mean += v / a;
  }
  if (mean == cplx(0.0, 0.0)) return out;
  const double shift = arg0(mean);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = wrap_phase(arg0(z[i]) - shift);
  return out;
}

namespace {

struct Plane {
  double a = 0.0, b = 0.0, mean = 0.0;
};

// Least-squares plane through `p` with centered coordinates (x and y are
// then orthogonal to the constant column and to each other on a full grid).
Plane fit_plane(const RealField& p) {
  const double xc = (static_cast<double>(p.cols()) - 1.0) / 2.0;
  const double yc = (static_cast<double>(p.rows()) - 1.0) / 2.0;
  double sxx = 0.0, syy = 0.0, sxy = 0.0, sxp = 0.0, syp = 0.0, sp = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const double y = static_cast<double>(r) - yc;
    for (std::size_t c = 0; c < p.cols(); ++c) {
      const double x = static_cast<double>(c) - xc;
      const double v = p(r, c);
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
      sxp += x * v;
      syp += y * v;
      sp += v;
    }
  }
  Plane f;
  const double det = sxx * syy - sxy * sxy;
  if (sxx > 0.0 && syy > 0.0 && det > 0.0) {
    f.a = (syy * sxp - sxy * syp) / det;
    f.b = (sxx * syp - sxy * sxp) / det;
  } else if (sxx > 0.0) {
    f.a = sxp / sxx;  // single row
  } else if (syy > 0.0) {
    f.b = syp / syy;  // single column
  }
  f.mean = sp / static_cast<double>(p.size()) - f.a * xc - f.b * yc;
  return f;
}

RealField without_ramp(const RealField& phase, double a, double b) {
  RealField out(phase.rows(), phase.cols());
  for (std::size_t r = 0; r < phase.rows(); ++r) {
    for (std::size_t c = 0; c < phase.cols(); ++c) {
      out(r, c) = wrap_phase(phase(r, c) - a * static_cast<double>(c) - b * static_cast<double>(r));
    }
  }
  return out;
}

}  // namespace

PhaseRampFit remove_phase_ramp(const ComplexField& z) {
  if (z.empty()) throw ContractError("remove_phase_ramp: empty field");
  PhaseRampFit fit;
  fit.magnitude = abs(z);
  fit.phase = phase(z);
  if (z.size() == 1) {
    fit.c = fit.phase[0];
    fit.field = z;
    return fit;
  }

  // Wraps bias a plane fit on wrapped phase, so one pass leaves some ramp in
  // the re-wrapped residual. Refit the residual until the slope stops
  // moving; the result is then a fixed point and a second call is a no-op.
  const RealField wrapped = fit.phase;
  Plane step = fit_plane(wrapped);
  RealField residual;
  for (int pass = 0; pass < 100; ++pass) {
    fit.a += step.a;
    fit.b += step.b;
    residual = without_ramp(wrapped, fit.a, fit.b);
    step = fit_plane(residual);
    if (std::abs(step.a) < 1e-13 && std::abs(step.b) < 1e-13) break;
  }
  fit.c = step.mean;
  fit.phase = std::move(residual);

  fit.field = ComplexField(z.rows(), z.cols());
  for (std::size_t i = 0; i < fit.field.size(); ++i) fit.field[i] = std::polar(fit.magnitude[i], fit.phase[i]);
  return fit;
}

}  // namespace ptycho
