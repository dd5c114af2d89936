#include <atomic>
#include <cstdlib>

#include "actland/kernels.hpp"

namespace actland::kernels {

#if defined(ACTLAND_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(ACTLAND_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif

const KernelTable* avx2_table() {
#if defined(ACTLAND_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(ACTLAND_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  return &kNeonTable;
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
  if (const auto* t = avx2_table()) tables.push_back(t);
  if (const auto* t = neon_table()) tables.push_back(t);
  return tables;
}

namespace {

const KernelTable* detect() {
  if (const char* forced = std::getenv("ACTLAND_SIMD")) {
    for (const auto* t : available_tables()) {
      if (std::string_view(t->name) == forced) return t;
    }
  }
  if (const auto* t = avx2_table()) return t;
  if (const auto* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

bool select(std::string_view name) {
  for (const auto* t : available_tables()) {
    if (name == t->name) {
      current().store(t, std::memory_order_relaxed);
      return true;
    }
  }
  return false;
}

}  // namespace actland::kernels
