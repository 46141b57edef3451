#include <atomic>
#include <cstdlib>
#include <string>

#include "meltpath/error.hpp"
#include "meltpath/simd/kernels.hpp"

namespace meltpath::simd {

#ifndef MELTPATH_HAVE_AVX2
const Kernels* avx2_kernels() { return nullptr; }
#endif

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
#if defined(MELTPATH_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa default_isa() {
  if (const char* env = std::getenv("MELTPATH_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

namespace {

const Kernels* table_for(Isa isa) {
  return isa == Isa::avx2 ? avx2_kernels() : &scalar_kernels();
}

std::atomic<const Kernels*>& active_table() {
  static std::atomic<const Kernels*> table{table_for(default_isa())};
  return table;
}

}  // namespace

const Kernels& active() { return *active_table().load(std::memory_order_acquire); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw InvalidArgument("SIMD variant '" + std::string(isa_name(isa)) + "' is not available");
  }
  active_table().store(table_for(isa), std::memory_order_release);
}

}  // namespace meltpath::simd
