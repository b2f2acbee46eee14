#include "ptycho/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ptycho/random.hpp"

namespace ptycho {

using std::numbers::pi;

void FzpParams::validate() const {
  if (!(wavelength > 0.0)) throw ContractError("fzp: wavelength must be > 0");
  if (grid_side < 2 || grid_side % 2 != 0) throw ContractError("fzp: grid side must be even and >= 2");
  if (!(pixel_size >= 0.0)) throw ContractError("fzp: pixel size must be >= 0 (0 = default)");
  if (!(outer_radius > 0.0) || !(outer_zone_width > 0.0)) {
    throw ContractError("fzp: outer radius and zone width must be > 0");
  }
  if (!(central_stop_diameter >= 0.0)) throw ContractError("fzp: central stop must be >= 0");
  if (central_stop_diameter / 2.0 >= outer_radius) {
    throw ContractError("fzp: central stop covers the whole zone plate, aperture is empty");
  }
  if (!std::isfinite(focal_length())) throw ContractError("fzp: focal length is not finite");
  if (!(propagation_distance() > 0.0)) {
    throw ContractError("fzp: f + L_s must be positive (sample downstream of the lens)");
  }
}

FzpParams fzp_for_window(std::size_t m, double beam_fill) {
  if (!(beam_fill > 0.0 && beam_fill < 1.0)) throw ContractError("fzp: beam fill must lie in (0, 1)");
  FzpParams p;
  p.grid_side = m;
  // Beam diameter at the sample is D |L_s| / f; with dx = lambda z / (2 D) it
  // covers 2 D^2 |L_s| / (f lambda z) pixels. Solve for L_s with z = f + L_s.
  const double d = 2.0 * p.outer_radius;
  const double f = p.focal_length();
  const double k = beam_fill * static_cast<double>(m) * f * p.wavelength / (2.0 * d * d);
  p.defocus_offset = -k * f / (1.0 + k);
  return p;
}

namespace {

// Roll by half the side in both axes (fftshift == ifftshift for even sides).
void half_roll(ComplexField& x) {
  const std::size_t m = x.rows();
  const std::size_t h = m / 2;
  ComplexField out(m, m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) out((r + h) % m, (c + h) % m) = x(r, c);
  }
  x = std::move(out);
}

}  // namespace

FzpProbe make_fzp_probe(const FzpParams& p) {
  p.validate();
  const std::size_t m = p.grid_side;
  const double f = p.focal_length();
  const double z = p.propagation_distance();
  const double dx = p.effective_pixel_size();
  const double dx0 = p.wavelength * z / (static_cast<double>(m) * dx);
  const double r_out = p.outer_radius;
  const double r_in = p.central_stop_diameter / 2.0;

  FzpProbe out;
  out.lens_plane_pixel = dx0;

  // Lens phase -pi r^2/(lambda f) and the input chirp pi r^2/(lambda z) of
  // the Fresnel integral, merged before sampling.
  const double chirp_in = pi * (1.0 / z - 1.0 / f) / p.wavelength;
  const double chirp_out = pi / (p.wavelength * z);
  const double half = static_cast<double>(m) / 2.0;

  ComplexField field(m, m);
  std::size_t open = 0;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const double y = (static_cast<double>(r) - half) * dx0;
      const double x = (static_cast<double>(c) - half) * dx0;
      const double rho2 = x * x + y * y;
      if (rho2 <= r_out * r_out && rho2 >= r_in * r_in) {
        field(r, c) = std::polar(1.0, chirp_in * rho2);
        ++open;
      }
    }
  }
  if (open == 0) throw ContractError("fzp: aperture covers no lens-plane pixel");

  if (r_out > (half - 1.0) * dx0) {
    std::ostringstream os;
    os << "zone plate radius " << r_out / dx0 << " px exceeds the lens-plane grid (" << half
       << " px); the aperture is clipped";
    out.warnings.push_back(os.str());
  }
  const double edge_rate = 2.0 * std::fabs(chirp_in) * std::min(r_out, half * dx0) * dx0;
  if (edge_rate > pi) {
    std::ostringstream os;
    os << "lens-plane chirp undersampled at the aperture edge (" << edge_rate
       << " rad/pixel > pi); increase the grid or reduce |L_s|";
    out.warnings.push_back(os.str());
  }
  const double out_rate = 2.0 * chirp_out * half * dx * dx;
  if (out_rate > pi) {
    std::ostringstream os;
    os << "sample-plane chirp undersampled (" << out_rate << " rad/pixel > pi)";
    out.warnings.push_back(os.str());
  }

  half_roll(field);
  fft2_inplace(field);
  half_roll(field);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const double y = (static_cast<double>(r) - half) * dx;
      const double x = (static_cast<double>(c) - half) * dx;
      field(r, c) *= std::polar(1.0, chirp_out * (x * x + y * y));
    }
  }
  out.probe = std::move(field);
  return out;
}

void ProbePerturbation::validate() const {
  if (!(sigma_amp >= 0.0)) throw ContractError("perturbation: sigma_amp must be >= 0");
  if (!(noise_amp >= 0.0 && noise_amp < 1.0)) throw ContractError("perturbation: noise_amp must lie in [0, 1)");
  if (!std::isfinite(ramp_magnitude) || !std::isfinite(defocus_coeff) || !std::isfinite(astig_coeff)) {
    throw ContractError("perturbation: coefficients must be finite");
  }
}

ComplexField perturb_probe(const ComplexField& truth, const ProbePerturbation& p, std::uint64_t seed) {
  p.validate();
  if (!truth.is_square() || truth.empty()) throw ContractError("perturb_probe: probe must be square");
  const std::size_t m = truth.rows();
  const double md = static_cast<double>(m);

  ComplexField mag(m, m);
  for (std::size_t i = 0; i < truth.size(); ++i) mag[i] = std::abs(truth[i]);
  RealField blurred(m, m);
  if (p.sigma_amp > 0.0) {
    fft2_inplace(mag);
    for (std::size_t r = 0; r < m; ++r) {
      const double fy = (r <= m / 2 ? static_cast<double>(r) : static_cast<double>(r) - md) / md;
      for (std::size_t c = 0; c < m; ++c) {
        const double fx = (c <= m / 2 ? static_cast<double>(c) : static_cast<double>(c) - md) / md;
        mag(r, c) *= std::exp(-2.0 * pi * pi * p.sigma_amp * p.sigma_amp * (fx * fx + fy * fy));
      }
    }
    ifft2_inplace(mag);
  }
  for (std::size_t i = 0; i < mag.size(); ++i) blurred[i] = std::max(0.0, mag[i].real());

  Rng rng(seed);
  const double theta = 2.0 * pi * rng.uniform();
  const double cx = std::cos(theta);
  const double cy = std::sin(theta);
  const double ramp = p.ramp_magnitude / (std::fabs(cx) + std::fabs(cy));
  const double ax = ramp * cx;
  const double ay = ramp * cy;

  double energy = 0.0;
  for (double v : blurred) energy += v * v;
  const double rms = std::sqrt(energy / static_cast<double>(blurred.size()));

  ComplexField out(m, m);
  const double denom = m > 1 ? md - 1.0 : 1.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double y = -1.0 + 2.0 * static_cast<double>(r) / denom;
    for (std::size_t c = 0; c < m; ++c) {
      const double x = -1.0 + 2.0 * static_cast<double>(c) / denom;
      const double phase = ax * x + ay * y + p.defocus_coeff * (x * x + y * y) +
                           p.astig_coeff * (x * x - y * y);
      out(r, c) = std::polar(blurred(r, c), phase);
    }
  }
  if (p.noise_amp > 0.0) {
    const double scale = p.noise_amp * rms / std::sqrt(2.0);
    for (auto& v : out) {
      const double re = rng.normal();
      const double im = rng.normal();
      v += scale * cplx(re, im);
    }
  }
  return out;
}

double dp_avg(const std::vector<RealField>& intensities) {
  if (intensities.empty()) throw ContractError("dp_avg: no diffraction frames");
  const std::size_t m = intensities.front().rows();
  double total = 0.0;
  for (const auto& d : intensities) {
    require_same_shape(intensities.front(), d, "dp_avg");
    for (double v : d) total += v;
  }
  return std::sqrt(total / static_cast<double>(intensities.size())) / static_cast<double>(m);
}

double probe_norm_target(const std::vector<RealField>& intensities) {
  return dp_avg(intensities) * static_cast<double>(intensities.front().rows());
}

ComplexField normalize_probe(const ComplexField& probe, const std::vector<RealField>& intensities) {
  const double target = probe_norm_target(intensities);
  const double norm = std::sqrt(norm2_squared(probe.span()));
  if (norm == 0.0) throw ContractError("normalize_probe: probe is identically zero");
  ComplexField out = probe;
  const double s = target / norm;
  for (auto& v : out) v *= s;
  return out;
}

std::size_t scan_step(std::size_t m, double overlap) {
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ContractError("scan grid: overlap must lie in [0, 1)");
  const double step = std::round((1.0 - overlap) * static_cast<double>(m));
  if (step < 1.0) throw ContractError("scan grid: overlap leaves a step below one pixel");
  return static_cast<std::size_t>(step);
}

ScanGeometry make_scan_grid(std::size_t n, std::size_t m, double overlap) {
  if (m == 0 || m > n) throw ContractError("scan grid: need 0 < m <= n");
  const std::size_t step = scan_step(m, overlap);
  std::vector<std::size_t> axis;
  for (std::size_t v = 0; v < n - m; v += step) axis.push_back(v);
  axis.push_back(n - m);
  std::vector<Offset> offsets;
  offsets.reserve(axis.size() * axis.size());
  for (std::size_t r : axis) {
    for (std::size_t c : axis) offsets.push_back({r, c});
  }
  return ScanGeometry(m, n, std::move(offsets));
}

ComplexField init_object_constant(std::size_t n, double noise_amp, std::uint64_t seed) {
  if (!(noise_amp >= 0.0)) throw ContractError("init_object_constant: noise must be >= 0");
  ComplexField z(n, n, cplx(1.0, 0.0));
  if (noise_amp > 0.0) {
    Rng rng(seed);
    for (auto& v : z) {
      const double re = 2.0 * rng.uniform() - 1.0;
      const double im = 2.0 * rng.uniform() - 1.0;
      v += noise_amp * cplx(re, im);
    }
  }
  return z;
}

ComplexField make_object(const RealField& magnitude_image, const RealField& phase_image) {
  require_same_shape(magnitude_image, phase_image, "make_object");
  double mag_max = 0.0;
  double phase_max = 0.0;
  for (double v : magnitude_image) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("make_object: magnitude image must be finite and >= 0");
    mag_max = std::max(mag_max, v);
  }
  for (double v : phase_image) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("make_object: phase image must be finite and >= 0");
    phase_max = std::max(phase_max, v);
  }
  if (mag_max == 0.0) throw ContractError("make_object: magnitude image is identically zero");
  ComplexField z(magnitude_image.rows(), magnitude_image.cols());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double phase = phase_max > 0.0 ? (pi / 2.0) * (phase_image[i] / phase_max) : 0.0;
    z[i] = std::polar(magnitude_image[i] / mag_max, phase);
  }
  return z;
}

RealField resample(const RealField& image, std::size_t rows, std::size_t cols) {
  if (image.empty() || rows == 0 || cols == 0) throw ContractError("resample: empty image");
  if (image.rows() == rows && image.cols() == cols) return image;
  RealField out(rows, cols);
  const double sy = static_cast<double>(image.rows()) / static_cast<double>(rows);
  const double sx = static_cast<double>(image.cols()) / static_cast<double>(cols);
  const double ymax = static_cast<double>(image.rows() - 1);
  const double xmax = static_cast<double>(image.cols() - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const double y = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, ymax);
    const auto y0 = static_cast<std::size_t>(y);
    const std::size_t y1 = std::min(y0 + 1, image.rows() - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, xmax);
      const auto x0 = static_cast<std::size_t>(x);
      const std::size_t x1 = std::min(x0 + 1, image.cols() - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = image(y0, x0) * (1.0 - fx) + image(y0, x1) * fx;
      const double bottom = image(y1, x0) * (1.0 - fx) + image(y1, x1) * fx;
      out(r, c) = top * (1.0 - fy) + bottom * fy;
    }
  }
  return out;
}

namespace {

// Lattice value noise; integer hashing keeps it identical on every platform.
double lattice(std::uint64_t salt, long ix, long iy) {
  const std::uint64_t key = (static_cast<std::uint64_t>(ix) << 32) ^ static_cast<std::uint32_t>(iy);
  return static_cast<double>(mix_seed(salt, key) >> 11) * 0x1.0p-53;
}

double value_noise(std::uint64_t salt, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const long ix = static_cast<long>(fx);
  const long iy = static_cast<long>(fy);
  const double tx = x - fx;
  const double ty = y - fy;
  const double sx = tx * tx * (3.0 - 2.0 * tx);
  const double sy = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice(salt, ix, iy) * (1.0 - sx) + lattice(salt, ix + 1, iy) * sx;
  const double b = lattice(salt, ix, iy + 1) * (1.0 - sx) + lattice(salt, ix + 1, iy + 1) * sx;
  return a * (1.0 - sy) + b * sy;
}

void rescale_unit(RealField& img) {
  const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
  const double a = *lo;
  const double span = *hi - *lo;
  for (double& v : img) v = span > 0.0 ? (v - a) / span : 0.0;
}

RealField texture_image(std::size_t side) {
  RealField img(side, side);
  const double s = static_cast<double>(side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double u = static_cast<double>(c) / s;
      const double v = static_cast<double>(r) / s;
      double acc = 0.0;
      double amp = 1.0;
      double freq = 4.0;
      for (int octave = 0; octave < 6; ++octave) {
        acc += amp * value_noise(0x7e57 + static_cast<std::uint64_t>(octave), u * freq, v * freq);
        amp *= 0.55;
        freq *= 2.0;
      }
      // Directional strands and a bright blob, loosely fur and a face.
      const double strands = 0.25 * std::sin(2.0 * pi * (18.0 * u + 6.0 * value_noise(0xf00, 3 * u, 3 * v)));
      const double du = u - 0.5;
      const double dv = v - 0.42;
      const double blob = 0.6 * std::exp(-(du * du + dv * dv) / 0.02);
      img(r, c) = acc + strands + blob;
    }
  }
  rescale_unit(img);
  return img;
}

RealField shapes_image(std::size_t side) {
  RealField img(side, side);
  const double s = static_cast<double>(side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double u = static_cast<double>(c) / s;
      const double v = static_cast<double>(r) / s;
      double val = 0.55 + 0.25 * v;  // sky-like gradient
      if (v > 0.78) val = 0.35 + 0.1 * value_noise(0x9a55, 40 * u, 40 * v);  // ground
      // standing figure: head, body, tripod legs
      const double hx = u - 0.42;
      const double hy = v - 0.22;
      if (hx * hx + hy * hy < 0.0045) val = 0.08;
      if (std::fabs(u - 0.42) < 0.09 - 0.2 * (v - 0.3) && v > 0.28 && v < 0.62) val = 0.05;
      if (v > 0.55 && v < 0.95 && std::fabs(u - 0.62 - 0.25 * (v - 0.55)) < 0.01) val = 0.15;
      if (v > 0.55 && v < 0.95 && std::fabs(u - 0.62 + 0.15 * (v - 0.55)) < 0.01) val = 0.15;
      if (std::fabs(u - 0.6) < 0.05 && std::fabs(v - 0.45) < 0.035) val = 0.2;  // camera box
      // background buildings
      if (u > 0.8 && u < 0.9 && v > 0.55 && v < 0.78) val = 0.7;
      if (u > 0.05 && u < 0.12 && v > 0.62 && v < 0.78) val = 0.75;
      img(r, c) = val;
    }
  }
  rescale_unit(img);
  return img;
}

}  // namespace

std::vector<std::string> builtin_image_names() { return {"texture", "shapes"}; }

RealField builtin_image(const std::string& name, std::size_t side) {
  if (side == 0) throw ContractError("builtin_image: side must be > 0");
  if (name == "texture") return texture_image(side);
  if (name == "shapes") return shapes_image(side);
  throw ContractError("builtin_image: unknown image '" + name + "' (known: texture, shapes)");
}

}  // namespace ptycho
