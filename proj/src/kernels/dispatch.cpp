#include <atomic>
#include <cstdlib>
#include <string_view>

#include "dmae/kernels/kernels.hpp"

namespace dmae::kernels {

#if defined(DMAE_HAVE_AVX2)
const KernelTable* avx2_table_compiled();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(DMAE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const char* env = std::getenv("DMAE_KERNELS");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable* avx2_table() {
#if defined(DMAE_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? avx2_table_compiled() : nullptr;
#else
  return nullptr;
#endif
}

Isa detect() { return avx2_table() != nullptr ? Isa::avx2 : Isa::scalar; }

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) {
  const KernelTable* t = (isa == Isa::avx2) ? avx2_table() : &scalar_table();
  current().store(t != nullptr ? t : &scalar_table(), std::memory_order_relaxed);
}

}  // namespace dmae::kernels
