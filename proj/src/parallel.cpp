#include "reward_align/parallel.hpp"

#include <atomic>

#include <omp.h>

namespace reward_align {

namespace {
std::atomic<int> g_default_jobs{0};
}

int resolve_jobs(int jobs) noexcept {
  if (jobs > 0) return jobs;
  const int configured = g_default_jobs.load(std::memory_order_relaxed);
  return configured > 0 ? configured : omp_get_max_threads();
}

void set_default_jobs(int jobs) noexcept {
  g_default_jobs.store(jobs > 0 ? jobs : 0, std::memory_order_relaxed);
}

}  // namespace reward_align
