#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

#include "ptycho/field.hpp"
#include "ptycho/simd.hpp"

namespace ptycho {
namespace {

// FFTW's planner is not thread-safe but fftw_execute_dft is. Plans are
// created once per side length with FFTW_ESTIMATE (deterministic plan
// choice) and FFTW_UNALIGNED so they can run on any std::complex buffer.
struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [side, plans] : plans_) {
      fftw_destroy_plan(plans.forward);
      fftw_destroy_plan(plans.backward);
    }
  }

  const PlanPair& get(std::size_t side) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(side);
    if (it != plans_.end()) return it->second;
    const int n = static_cast<int>(side);
    auto* scratch = fftw_alloc_complex(side * side);
    PlanPair plans;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans.forward = fftw_plan_dft_2d(n, n, scratch, scratch, FFTW_FORWARD, flags);
    plans.backward = fftw_plan_dft_2d(n, n, scratch, scratch, FFTW_BACKWARD, flags);
    fftw_free(scratch);
    return plans_.emplace(side, plans).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void run(ComplexField& x, bool forward) {
  if (!x.is_square() || x.empty()) {
    throw ContractError("fft2: expected a non-empty square field, got " + std::to_string(x.rows()) +
                        "x" + std::to_string(x.cols()));
  }
  const PlanPair& plans = plan_cache().get(x.rows());
  auto* buf = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(forward ? plans.forward : plans.backward, buf, buf);
  simd::kernels().scale(x.span(), 1.0 / static_cast<double>(x.rows()));
}

}  // namespace

void fft2_inplace(ComplexField& x) { run(x, true); }
void ifft2_inplace(ComplexField& y) { run(y, false); }

ComplexField fft2(const ComplexField& x) {
  ComplexField out = x;
  fft2_inplace(out);
  return out;
}

ComplexField ifft2(const ComplexField& y) {
  ComplexField out = y;
  ifft2_inplace(out);
  return out;
}

}  // namespace ptycho
