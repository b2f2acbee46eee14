#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptycho/field.hpp"
#include "ptycho/forward.hpp"

namespace ptycho {

/// Fresnel zone plate illumination. Lengths in meters.
struct FzpParams {
  double wavelength = 1.2398419843320026e-10;  // 10 keV
  std::size_t grid_side = 128;
  double pixel_size = 0.0;  ///< sample-plane pixel; 0 picks the default below
  double outer_radius = 90e-6;
  double outer_zone_width = 50e-9;
  double central_stop_diameter = 60e-6;
  double defocus_offset = -3e-4;

  double focal_length() const noexcept { return 2.0 * outer_radius * outer_zone_width / wavelength; }
  double propagation_distance() const noexcept { return focal_length() + defocus_offset; }
  /// Sample pixel for which the zone plate spans half of the lens-plane grid.
  double default_pixel_size() const noexcept {
    return wavelength * propagation_distance() / (4.0 * outer_radius);
  }
  double effective_pixel_size() const noexcept {
    return pixel_size > 0.0 ? pixel_size : default_pixel_size();
  }
  void validate() const;
};

/// Zone-plate defaults for an m x m window: the lens fills half of the
/// lens-plane grid and L_s (negative, sample upstream of the focus) is chosen
/// so the defocused beam spans `beam_fill` of the window. Keeps the lens
/// chirp below pi/2 rad per pixel for beam_fill = 0.5.
FzpParams fzp_for_window(std::size_t m, double beam_fill = 0.5);

struct FzpProbe {
  ComplexField probe;
  double lens_plane_pixel = 0.0;  ///< lambda (f + L_s) / (m dx)
  std::vector<std::string> warnings;  ///< sampling problems, not fatal
};

/// Annular aperture with lens phase exp(-i pi r^2 / (lambda f)), propagated
/// over f + L_s to the sample plane with a single-transform Fresnel step.
/// The step is unitary, so ||probe||_2 equals the aperture's l2 norm.
FzpProbe make_fzp_probe(const FzpParams& params);

struct ProbePerturbation {
  double sigma_amp = 2.0;        ///< Gaussian blur of |Q| in pixels
  double ramp_magnitude = 7.0;   ///< max |a_x x + a_y y| over the field, radians
  double defocus_coeff = 0.6;    ///< times x^2 + y^2, x and y in [-1, 1]
  double astig_coeff = 0.2;      ///< times x^2 - y^2
  double noise_amp = 0.01;       ///< complex noise relative to rms |Q|

  void validate() const;
};

/// Initial probe guess: blurred magnitude of the true probe with low-order
/// phase aberrations and a little complex noise. The true phase is dropped.
ComplexField perturb_probe(const ComplexField& truth, const ProbePerturbation& p, std::uint64_t seed);

/// sqrt(sum_ij mean_k d_k[ij]) / m, the data-derived probe scale as usually
/// written for an unnormalized DFT.
double dp_avg(const std::vector<RealField>& intensities);

/// Probe norm matched to the data: with the unitary transform sum_ij d_k =
/// ||Q z_k||^2, so the target is m * dp_avg = sqrt(sum_ij mean_k d_k), which
/// equals ||Q|| for a unit-magnitude object.
double probe_norm_target(const std::vector<RealField>& intensities);

/// Q * probe_norm_target / ||Q||_2
ComplexField normalize_probe(const ComplexField& probe, const std::vector<RealField>& intensities);

/// step = round((1 - overlap) m); raster over [0, n - m] with the last
/// row/column clamped to n - m.
ScanGeometry make_scan_grid(std::size_t n, std::size_t m, double overlap);
std::size_t scan_step(std::size_t m, double overlap);

/// Ones plus uniform complex noise in [-a, a] + i[-a, a].
ComplexField init_object_constant(std::size_t n, double noise_amp = 0.0, std::uint64_t seed = 0);

/// (mag / max mag) exp(i (pi/2) phase / max phase). Both images must be
/// nonnegative; an all-zero phase image gives phase 0, an all-zero magnitude
/// image is rejected.
ComplexField make_object(const RealField& magnitude_image, const RealField& phase_image);

/// Bilinear resampling with pixel centers aligned.
RealField resample(const RealField& image, std::size_t rows, std::size_t cols);

/// Built-in test images, values in [0, 1]. "texture" is fur-like detail for
/// the magnitude, "shapes" is a piecewise-smooth scene for the phase.
RealField builtin_image(const std::string& name, std::size_t side);
std::vector<std::string> builtin_image_names();

}  // namespace ptycho
