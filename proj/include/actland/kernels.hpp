#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference version and
// optional vectorized versions (AVX2+FMA on x86-64, NEON on AArch64). The
// active table is picked once at startup from the CPU's capabilities and can
// be forced with the ACTLAND_SIMD environment variable (scalar|avx2|neon).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace actland::kernels {

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] = max(x[i], 0)
  void (*relu)(double* x, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// All tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

const KernelTable& active();
// Returns false if the named table is unavailable; the active table is unchanged.
bool select(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void relu(std::span<double> x) { active().relu(x.data(), x.size()); }

inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }

}  // namespace actland::kernels
