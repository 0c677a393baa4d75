#include "tiltbench/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tiltbench {

namespace {
std::atomic<int> g_override{0};

int env_cap() {
  const char* raw = std::getenv("TILTBENCH_THREADS");
  if (raw == nullptr) return 0;
  try {
    const int v = std::stoi(raw);
    return v > 0 ? v : 0;
  } catch (...) {
    return 0;
  }
}
}  // namespace

int worker_count() {
  int n = g_override.load();
  if (n <= 0) {
#ifdef _OPENMP
    n = omp_get_max_threads();
#else
    n = 1;
#endif
  }
  if (const int cap = env_cap(); cap > 0) n = std::min(n, cap);
  return std::max(n, 1);
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace tiltbench
