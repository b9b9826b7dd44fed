#include "gridwatch/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace gridwatch::kernels {

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &scalar::residual_stats, &scalar::weighted_gram};
  return table;
}

const KernelTable* avx2_table() {
#if defined(GRIDWATCH_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  static const KernelTable table{"avx2", &avx2::residual_stats, &avx2::weighted_gram};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("GRIDWATCH_KERNELS");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
    if (const auto* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace gridwatch::kernels
