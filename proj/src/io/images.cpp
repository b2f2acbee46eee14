#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>

#include "ptycho/io.hpp"
#include "ptycho/metrics.hpp"

namespace ptycho {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const fs::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

// Reads whitespace-separated header tokens, skipping comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

RealField read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5") throw DataError(path.string() + ": not a PGM file");
  std::size_t w = 0, h = 0;
  long maxval = 0;
  try {
    w = std::stoul(pgm_token(in));
    h = std::stoul(pgm_token(in));
    maxval = std::stol(pgm_token(in));
  } catch (const std::exception&) {
    throw CorruptFileError(path.string() + ": malformed PGM header");
  }
  if (w == 0 || h == 0 || maxval < 1 || maxval > 65535) {
    throw CorruptFileError(path.string() + ": unsupported PGM header values");
  }
  RealField img(h, w);
  if (magic == "P2") {
    for (double& v : img) {
      long x = 0;
      if (!(in >> x) || x < 0 || x > maxval) throw CorruptFileError(path.string() + ": bad PGM sample");
      v = static_cast<double>(x) / static_cast<double>(maxval);
    }
  } else {
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(img.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw CorruptFileError(path.string() + ": truncated PGM data");
    }
    for (std::size_t i = 0; i < img.size(); ++i) {
      const long x = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
      img[i] = static_cast<double>(std::min(x, maxval)) / static_cast<double>(maxval);
    }
  }
  return img;
}

RealField read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError(path.string() + ": " + image.message);
  }
  // 16-bit files are read as linear 16-bit gray, everything else as 8-bit
  // gray so stored 8-bit values come back without gamma conversion.
  const bool wide = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
  image.format = wide ? PNG_FORMAT_LINEAR_Y : PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw CorruptFileError(path.string() + ": " + msg);
  }
  RealField img(image.height, image.width);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (wide) {
      png_uint_16 v;
      std::memcpy(&v, buf.data() + 2 * i, 2);
      img[i] = v / 65535.0;
    } else {
      img[i] = buf[i] / 255.0;
    }
  }
  return img;
}

void write_png(const fs::path& path, const std::vector<unsigned char>& pixels, std::size_t rows,
               std::size_t cols, bool rgb) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(cols);
  image.height = static_cast<png_uint_32>(rows);
  image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  File f = open_file(path, "wb");
  if (!png_image_write_to_stdio(&image, f.get(), 0, pixels.data(), 0, nullptr)) {
    throw DataError("cannot write " + path.string() + ": " + image.message);
  }
}

unsigned char to_byte(double x) {
  return static_cast<unsigned char>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

}  // namespace

RealField read_image(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("image not found: " + path.string());
  unsigned char sig[8] = {};
  {
    std::ifstream in(path, std::ios::binary);
    in.read(reinterpret_cast<char*>(sig), 8);
  }
  if (png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  if (sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) return read_pgm(path);
  throw DataError(path.string() + ": unsupported image format (expected PNG or PGM)");
}

void write_png_gray(const fs::path& path, const RealField& values, double lo, double hi) {
  std::vector<unsigned char> px(values.size());
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) px[i] = to_byte((values[i] - lo) / span);
  write_png(path, px, values.rows(), values.cols(), false);
}

void write_png_rgb(const fs::path& path, const RgbImage& image) {
  std::vector<unsigned char> px;
  px.reserve(image.size() * 3);
  for (const auto& p : image) {
    px.push_back(p.r);
    px.push_back(p.g);
    px.push_back(p.b);
  }
  write_png(path, px, image.rows(), image.cols(), true);
}

void write_magnitude_png(const fs::path& path, const ComplexField& z) {
  const RealField mag = abs(z);
  double hi = 0.0;
  for (double v : mag) hi = std::max(hi, v);
  write_png_gray(path, mag, 0.0, hi);
}

Rgb8 cyclic_color(double phase) noexcept {
  // Hue wheel with phase 0 at red; equal-brightness sinusoids.
  const double t = wrap_phase(phase);
  constexpr double third = 2.0 * std::numbers::pi / 3.0;
  const auto ch = [&](double shift) { return to_byte(0.5 + 0.5 * std::cos(t - shift)); };
  return {ch(0.0), ch(third), ch(-third)};
}

void write_phase_png(const fs::path& path, const RealField& phase) {
  RgbImage img(phase.rows(), phase.cols());
  for (std::size_t i = 0; i < phase.size(); ++i) img[i] = cyclic_color(phase[i]);
  write_png_rgb(path, img);
}

void write_field_text(const fs::path& path, const RealField& values) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.precision(17);
  for (std::size_t r = 0; r < values.rows(); ++r) {
    for (std::size_t c = 0; c < values.cols(); ++c) f << r << " " << c << " " << values(r, c) << "\n";
    f << "\n";
  }
}

}  // namespace ptycho
