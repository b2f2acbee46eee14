#include "ptycho/field.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ptycho/simd.hpp"

namespace ptycho {

ScanGeometry::ScanGeometry(std::size_t probe_side, std::size_t object_side,
                           std::vector<Offset> offsets)
    : probe_side_(probe_side), object_side_(object_side), offsets_(std::move(offsets)) {
  if (probe_side_ == 0 || object_side_ < probe_side_) {
    throw ContractError("scan geometry: need 0 < probe side <= object side, got m=" +
                        std::to_string(probe_side_) + " n=" + std::to_string(object_side_));
  }
  if (offsets_.empty()) throw ContractError("scan geometry: no scan positions");
  const std::size_t limit = object_side_ - probe_side_;
  std::set<Offset> seen;
  for (const auto& o : offsets_) {
    if (o.row > limit || o.col > limit) {
      throw ContractError("scan geometry: offset (" + std::to_string(o.row) + ", " +
                          std::to_string(o.col) + ") puts the patch outside the object");
    }
    if (!seen.insert(o).second) {
      throw ContractError("scan geometry: duplicate offset (" + std::to_string(o.row) + ", " +
                          std::to_string(o.col) + ")");
    }
  }
}

const Offset& ScanGeometry::offset(std::size_t k) const {
  if (k >= offsets_.size()) {
    throw IndexError("scan index " + std::to_string(k) + " out of range (N=" +
                     std::to_string(offsets_.size()) + ")");
  }
  return offsets_[k];
}

namespace {

void check_object(const ComplexField& object, const ScanGeometry& geometry) {
  if (object.rows() != geometry.object_side() || object.cols() != geometry.object_side()) {
    throw ContractError("object is " + std::to_string(object.rows()) + "x" +
                        std::to_string(object.cols()) + ", geometry expects " +
                        std::to_string(geometry.object_side()) + "x" +
                        std::to_string(geometry.object_side()));
  }
}

}  // namespace

void extract_patch(const ComplexField& object, const ScanGeometry& geometry, std::size_t k,
                   ComplexField& patch) {
  const Offset& o = geometry.offset(k);
  check_object(object, geometry);
  const std::size_t m = geometry.probe_side();
  if (patch.rows() != m || patch.cols() != m) patch = ComplexField::square(m);
  for (std::size_t r = 0; r < m; ++r) {
    const cplx* src = object.data() + (o.row + r) * object.cols() + o.col;
    std::copy(src, src + m, patch.data() + r * m);
  }
}

ComplexField extract_patch(const ComplexField& object, const ScanGeometry& geometry,
                           std::size_t k) {
  ComplexField patch;
  extract_patch(object, geometry, k, patch);
  return patch;
}

void scatter_patch(ComplexField& object, const ComplexField& patch, const ScanGeometry& geometry,
                   std::size_t k) {
  const Offset& o = geometry.offset(k);
  check_object(object, geometry);
  const std::size_t m = geometry.probe_side();
  if (patch.rows() != m || patch.cols() != m) {
    throw ContractError("scatter_patch: patch is " + std::to_string(patch.rows()) + "x" +
                        std::to_string(patch.cols()) + ", expected " + std::to_string(m) + "x" +
                        std::to_string(m));
  }
  for (std::size_t r = 0; r < m; ++r) {
    const cplx* src = patch.data() + r * m;
    std::copy(src, src + m, object.data() + (o.row + r) * object.cols() + o.col);
  }
}

ComplexField hadamard(const ComplexField& a, const ComplexField& b) {
  require_same_shape(a, b, "hadamard");
  ComplexField out(a.rows(), a.cols());
  simd::kernels().multiply(a.span(), b.span(), out.span());
  return out;
}

RealField abs2(const ComplexField& a) {
  RealField out(a.rows(), a.cols());
  simd::kernels().abs2(a.span(), out.span());
  return out;
}

RealField abs(const ComplexField& a) {
  RealField out(a.rows(), a.cols());
  std::transform(a.begin(), a.end(), out.begin(), [](cplx v) { return std::abs(v); });
  return out;
}

double arg0(cplx v) noexcept {
  if (v == cplx(0.0, 0.0)) return 0.0;
  const double t = std::arg(v);
  // atan2 returns -pi for (negative, -0.0); fold onto the half-open interval.
  return t == -M_PI ? M_PI : t;
}

RealField phase(const ComplexField& a) {
  RealField out(a.rows(), a.cols());
  std::transform(a.begin(), a.end(), out.begin(), arg0);
  return out;
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw ContractError("inner: length mismatch");
  cplx sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * b[i];
  return sum;
}

double norm2_squared(std::span<const cplx> a) {
  double sum = 0.0;
  for (auto v : a) sum += std::norm(v);
  return sum;
}

double norm2_squared(std::span<const double> a) {
  double sum = 0.0;
  for (auto v : a) sum += v * v;
  return sum;
}

double max_abs(std::span<const cplx> a) { return std::sqrt(simd::kernels().max_abs2(a)); }

bool all_finite(const ComplexField& a) {
  return std::all_of(a.begin(), a.end(),
                     [](cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

bool all_finite(const RealField& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

ComplexField polar_field(const RealField& magnitude, const RealField& phase) {
  require_same_shape(magnitude, phase, "polar_field");
  ComplexField out(magnitude.rows(), magnitude.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::polar(magnitude[i], phase[i]);
  return out;
}

}  // namespace ptycho
