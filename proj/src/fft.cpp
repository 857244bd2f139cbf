#include "fft.hpp"

#include <map>
#include <mutex>

namespace prosodykit::detail {
namespace {
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftWorkspace::FftWorkspace(std::size_t n)
    : n_(n), in_(fftw_alloc_real(n)), out_(fftw_alloc_complex(n / 2 + 1)) {}

FftWorkspace::~FftWorkspace() {
  fftw_free(in_);
  fftw_free(out_);
}

fftw_plan r2c_plan(std::size_t n) {
  std::lock_guard lock(plan_mutex());
  static std::map<std::size_t, fftw_plan> plans;
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  // Planning with ESTIMATE does not touch the arrays; they only fix alignment.
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, plan);
  return plan;
}

void power_spectrum(fftw_plan plan, FftWorkspace& ws, std::span<double> power) {
  fftw_execute_dft_r2c(plan, ws.input(), ws.output());
  const fftw_complex* X = ws.output();
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = X[k][0] * X[k][0] + X[k][1] * X[k][1];
}

}  // namespace prosodykit::detail
