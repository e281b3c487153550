#pragma once

// Thin RAII layer over FFTW. Planning is serialized; execution is not.

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "slab/errors.hpp"

namespace slab::fft {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : p_(p) {
    if (p_ == nullptr) throw std::runtime_error("fftw: planning failed");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p_);
  }
  void execute() const { fftw_execute(p_); }

 private:
  fftw_plan p_;
};

enum class Direction { kForward = FFTW_FORWARD, kBackward = FFTW_BACKWARD };

/// In-place unnormalized multidimensional DFT,
/// X_k = sum_x x_n exp(-+ 2 pi i k.n / N), row-major layout.
inline void dft(std::vector<std::complex<double>>& data, const std::vector<int>& dims, Direction dir) {
  std::size_t total = 1;
  for (int n : dims) total *= static_cast<std::size_t>(n);
  if (total != data.size()) throw InvalidArgument("fft::dft: size does not match dims");
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan raw;
  {
    std::lock_guard lock(planner_mutex());
    raw = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr, static_cast<int>(dir),
                        FFTW_ESTIMATE);
  }
  Plan(raw).execute();
}

/// In-place DST-I (FFTW RODFT00): Y_k = 2 sum_{j=0}^{n-1} X_j sin(pi (j+1)(k+1) / (n+1)).
inline void dst1(std::vector<double>& data) {
  if (data.empty()) return;
  fftw_plan raw;
  {
    std::lock_guard lock(planner_mutex());
    raw = fftw_plan_r2r_1d(static_cast<int>(data.size()), data.data(), data.data(), FFTW_RODFT00,
                           FFTW_ESTIMATE);
  }
  Plan(raw).execute();
}

}  // namespace slab::fft
