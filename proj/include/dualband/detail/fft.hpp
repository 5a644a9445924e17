#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>

namespace dualband::detail {

// FFTW planning is not thread-safe but executing a plan on caller-owned arrays is.
// Plans are built once per size and kept for the lifetime of the process.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan backward(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    // In-place plan; execution must be in-place as well.
    auto* buf = fftw_alloc_complex(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan");
    plans_.emplace(n, plan);
    return plan;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

/// Unnormalized inverse DFT in place: x[n] <- sum_k x[k] exp(+j 2 pi k n / N).
inline void inverse_dft_inplace(std::span<std::complex<double>> x) {
  fftw_plan plan = FftPlanCache::instance().backward(x.size());
  auto* data = reinterpret_cast<fftw_complex*>(x.data());
  fftw_execute_dft(plan, data, data);
}

}  // namespace dualband::detail
