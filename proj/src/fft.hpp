#pragma once

#include <fftw3.h>

#include <cstddef>
#include <span>

namespace prosodykit::detail {

// Real-to-complex transform of a fixed size. The FFTW plan is created once
// per size under a global lock; execution uses caller-owned buffers, so
// one RealFft may be shared between threads as long as each thread calls
// power_spectrum with its own FftWorkspace.
class FftWorkspace {
 public:
  explicit FftWorkspace(std::size_t n);
  ~FftWorkspace();
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;

  std::size_t size() const noexcept { return n_; }
  double* input() noexcept { return in_; }
  fftw_complex* output() noexcept { return out_; }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
};

fftw_plan r2c_plan(std::size_t n);

// |X_k|^2 for k = 0..n/2 of the workspace input (which is consumed).
void power_spectrum(fftw_plan plan, FftWorkspace& ws, std::span<double> power);

}  // namespace prosodykit::detail
