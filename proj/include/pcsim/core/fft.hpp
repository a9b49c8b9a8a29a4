#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace pcsim {

namespace detail {
// FFTW planning is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Forward real-to-complex transform of length n (input zero-padded or
/// truncated to n). Returns n/2 + 1 bins, unnormalized.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rfft: zero length");
  std::vector<double> in(n, 0.0);
  for (std::size_t i = 0; i < std::min(n, x.size()); ++i) in[i] = x[i];
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

/// In-place complex transform; sign -1 forward, +1 backward. Unnormalized.
inline void cfft(std::vector<std::complex<double>>& x, int sign) {
  if (x.empty()) throw std::invalid_argument("cfft: zero length");
  fftw_plan plan;
  auto* p = reinterpret_cast<fftw_complex*>(x.data());
  {
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(x.size()), p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lk(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace pcsim
