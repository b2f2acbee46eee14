#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ptycho/field.hpp"
#include "ptycho/forward.hpp"
#include "ptycho/runner.hpp"

namespace ptycho {

/// Free-form key/value pairs stored in a container manifest.
using Provenance = std::map<std::string, std::string>;

inline constexpr int kContainerVersion = 1;

/// A dataset container is a directory with manifest.json and one raw
/// little-endian file per array (complex values interleaved re, im).
void save_dataset(const std::filesystem::path& dir, const Dataset& data,
                  const Provenance& provenance = {});
/// Throws CorruptFileError on size or checksum mismatch and
/// UnsupportedVersionError on an unknown format version.
Dataset load_dataset(const std::filesystem::path& dir, Provenance* provenance = nullptr);

struct Reconstruction {
  ComplexField probe;
  ComplexField object;
  Provenance provenance;
};

void save_reconstruction(const std::filesystem::path& dir, const Reconstruction& rec);
Reconstruction load_reconstruction(const std::filesystem::path& dir);

/// CSV with columns iter, residual, mag_error, elapsed_s, stop_flag and an
/// optional certification column. `identity` goes into "# key=value"
/// comment lines ahead of the header.
void write_log_csv(const std::filesystem::path& path, const ConvergenceLog& log,
                   const Provenance& identity = {});

struct LoadedLog {
  ConvergenceLog log;
  Provenance identity;
};

/// Throws DataError on a missing column or malformed row.
LoadedLog read_log_csv(const std::filesystem::path& path);

/// Grayscale image scaled to [0, 1]; 8/16-bit PGM (P2, P5) or PNG (any color
/// type, converted to luminance).
RealField read_image(const std::filesystem::path& path);

struct Rgb8 {
  unsigned char r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};
using RgbImage = Grid<Rgb8>;

/// 8-bit gray, linear from lo to hi (values outside clamp).
void write_png_gray(const std::filesystem::path& path, const RealField& values, double lo, double hi);
void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

/// |z| in gray over [0, max |z|].
void write_magnitude_png(const std::filesystem::path& path, const ComplexField& z);
/// Phase in (-pi, pi] through a cyclic color wheel.
void write_phase_png(const std::filesystem::path& path, const RealField& phase);
Rgb8 cyclic_color(double phase) noexcept;

/// Raw field dumps for plotting tools, one "row col value" line per pixel.
void write_field_text(const std::filesystem::path& path, const RealField& values);

}  // namespace ptycho
