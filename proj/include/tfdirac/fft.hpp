#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace tfdirac::detail {

// Process-wide cache of in-place FFTW plans.  Planning is serialized (FFTW's
// planner is not thread-safe); executing a cached plan on new arrays is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  fftw_plan get(int rank, int n, int howmany, int sign) {
    const auto key = std::make_tuple(rank, n, howmany, sign);
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::size_t total = static_cast<std::size_t>(howmany);
    std::vector<int> dims(rank, n);
    for (int r = 0; r < rank; ++r) total *= static_cast<std::size_t>(n);
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    if (buf == nullptr) throw std::bad_alloc();
    fftw_plan plan = fftw_plan_many_dft(rank, dims.data(), howmany, buf, nullptr, howmany, 1, buf,
                                        nullptr, howmany, 1, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (plan == nullptr) throw std::runtime_error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

/// Unnormalized in-place DFT over a rank-d cube of side n with `howmany`
/// interleaved components (component index fastest).  sign = FFTW_FORWARD
/// gives sum_k a_k e^{-2 pi i k l / n}.
inline void dft_inplace(std::span<std::complex<double>> data, int rank, int n, int howmany, int sign) {
  fftw_plan plan = PlanCache::instance().get(rank, n, howmany, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
}

}  // namespace tfdirac::detail
