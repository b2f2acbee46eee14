#include <atomic>
#include <cstdlib>
#include <string>

#include "ptycho/simd.hpp"

namespace ptycho::simd {
namespace {

Level initial_level() {
  if (const char* env = std::getenv("PTYCHO_SIMD")) {
    const Level requested = parse_level(env);
    if (available(requested)) return requested;
  }
  return best_available();
}

std::atomic<Level>& active_slot() {
  static std::atomic<Level> slot{initial_level()};
  return slot;
}

}  // namespace

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return "scalar";
    case Level::avx2:
      return "avx2";
  }
  return "unknown";
}

Level parse_level(std::string_view name) {
  if (name == "scalar") return Level::scalar;
  if (name == "avx2") return Level::avx2;
  throw ContractError("unknown SIMD level '" + std::string(name) + "' (expected scalar|avx2)");
}

bool available(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return true;
    case Level::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Level best_available() noexcept { return available(Level::avx2) ? Level::avx2 : Level::scalar; }

Level active() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active(Level level) {
  if (!available(level)) {
    throw ContractError("SIMD level '" + std::string(to_string(level)) +
                        "' is not supported on this CPU");
  }
  active_slot().store(level, std::memory_order_relaxed);
}

const KernelTable& table(Level level) {
  if (!available(level)) {
    throw ContractError("SIMD level '" + std::string(to_string(level)) +
                        "' is not supported on this CPU");
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (level == Level::avx2) return detail::avx2_table;
#endif
  return detail::scalar_table;
}

const KernelTable& kernels() {
#if defined(__x86_64__) || defined(_M_X64)
  if (active() == Level::avx2) return detail::avx2_table;
#endif
  return detail::scalar_table;
}

}  // namespace ptycho::simd
