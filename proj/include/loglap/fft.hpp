#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace loglap::fft {

namespace detail {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, PlanDeleter>;

// Planning in FFTW is not thread-safe; execution with the new-array
// interface is. Plans are created once per (size, direction) under a lock and
// made with FFTW_ESTIMATE | FFTW_UNALIGNED so any std::vector buffer works
// and the chosen algorithm is deterministic.
inline fftw_plan plan_for(int n, int sign) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, PlanPtr> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{n, sign}];
  if (!slot) {
    auto* in = fftw_alloc_complex(static_cast<std::size_t>(n));
    auto* out = fftw_alloc_complex(static_cast<std::size_t>(n));
    slot.reset(fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED));
    fftw_free(in);
    fftw_free(out);
  }
  return slot.get();
}

inline void execute(std::span<const std::complex<double>> in, std::span<std::complex<double>> out,
                    int sign) {
  // fftw_execute_dft takes a non-const input pointer but does not write to it
  // for out-of-place plans.
  auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
  auto* dst = reinterpret_cast<fftw_complex*>(out.data());
  fftw_execute_dft(plan_for(static_cast<int>(in.size()), sign), src, dst);
}

}  // namespace detail

/// Unnormalized forward DFT: X_k = sum_j x_j exp(-2 pi i jk/n).
inline std::vector<std::complex<double>> forward(std::span<const std::complex<double>> x) {
  std::vector<std::complex<double>> out(x.size());
  if (!x.empty()) detail::execute(x, out, FFTW_FORWARD);
  return out;
}

/// Unnormalized backward DFT: x_j = sum_k X_k exp(+2 pi i jk/n).
inline std::vector<std::complex<double>> backward(std::span<const std::complex<double>> x) {
  std::vector<std::complex<double>> out(x.size());
  if (!x.empty()) detail::execute(x, out, FFTW_BACKWARD);
  return out;
}

}  // namespace loglap::fft
