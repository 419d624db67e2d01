#pragma once

#include <exception>
#include <mutex>

namespace reward_align {

/// Worker count for OpenMP regions: `jobs` when positive, otherwise the
/// process-wide default set by set_default_jobs() (or the OpenMP default).
int resolve_jobs(int jobs) noexcept;

/// Caps every later parallel region that is called with jobs <= 0.
void set_default_jobs(int jobs) noexcept;

/// Exceptions must not escape an OpenMP region; workers park the first one
/// here and the caller rethrows after the region.
class FirstException {
 public:
  template <typename F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace reward_align
