#include "prosodykit/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"

namespace prosodykit::kernels {
namespace {

void mel_frame(std::span<const double> x, const MelArgs& args, fftw_plan plan, std::size_t i,
               detail::FftWorkspace& ws, std::vector<double>& power, std::span<double> out) {
  double* in = ws.input();
  const double* src = x.data() + i * args.hop;
  for (std::size_t k = 0; k < args.frame_len; ++k) in[k] = src[k] * args.window[k];
  std::fill(in + args.frame_len, in + args.n_fft, 0.0);
  detail::power_spectrum(plan, ws, power);
  for (std::size_t m = 0; m < args.filters.size(); ++m) {
    const MelFilter& f = args.filters[m];
    double e = 0.0;
    for (std::size_t j = 0; j < f.weights.size(); ++j) e += f.weights[j] * power[f.first_bin + j];
    out[m] = std::log(std::max(args.log_floor, e));
  }
}

double rms_frame(std::span<const double> x, const RmsArgs& args, std::size_t i) {
  const std::size_t len = args.window.size();
  const double* src = x.data() + args.starts[i];
  double acc = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double v = src[k] * args.window[k];
    acc += v * v;
  }
  return std::sqrt(acc / static_cast<double>(len));
}

void cost_row(const Matrix& a, const Matrix& b, std::size_t i, Matrix& out) {
  const auto ra = a.row(i);
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const auto rb = b.row(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < ra.size(); ++k) {
      const double d = ra[k] - rb[k];
      acc += d * d;
    }
    out(i, j) = std::sqrt(acc);
  }
}

}  // namespace

double yin_estimate(std::span<const double> seg, const YinArgs& args, std::vector<double>& diff) {
  const std::size_t W = args.window;
  const std::size_t tmax = args.tau_max;

  double power = 0.0;
  for (double v : seg) power += v * v;
  if (power / static_cast<double>(seg.size()) < 1e-12) return 0.0;

  diff.assign(tmax + 2, 0.0);
  for (std::size_t tau = 1; tau <= tmax; ++tau) {
    double acc = 0.0;
    for (std::size_t j = 0; j < W; ++j) {
      const double d = seg[j] - seg[j + tau];
      acc += d * d;
    }
    diff[tau] = acc;
  }

  // cumulative-mean normalisation, in place
  diff[0] = 1.0;
  double running = 0.0;
  for (std::size_t tau = 1; tau <= tmax; ++tau) {
    running += diff[tau];
    diff[tau] = running > 0.0 ? diff[tau] * static_cast<double>(tau) / running : 1.0;
  }

  std::size_t best = 0;
  for (std::size_t tau = args.tau_min; tau < tmax; ++tau) {
    if (diff[tau] < args.threshold) {
      while (tau + 1 < tmax && diff[tau + 1] < diff[tau]) ++tau;
      best = tau;
      break;
    }
  }
  if (best == 0) return 0.0;

  double refined = static_cast<double>(best);
  const double a = diff[best - 1], b = diff[best], c = diff[best + 1];
  const double denom = a - 2.0 * b + c;
  if (denom > 0.0) refined += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);

  const double f0 = args.sample_rate / refined;
  if (f0 < args.f0_floor || f0 > args.f0_ceil) return 0.0;
  return f0;
}

namespace serial {

Matrix log_mel(std::span<const double> x, const MelArgs& args) {
  Matrix out(args.n_frames, args.filters.size());
  const fftw_plan plan = detail::r2c_plan(args.n_fft);
  detail::FftWorkspace ws(args.n_fft);
  std::vector<double> power(args.n_fft / 2 + 1);
  for (std::size_t i = 0; i < args.n_frames; ++i) mel_frame(x, args, plan, i, ws, power, out.row(i));
  return out;
}

std::vector<double> yin(std::span<const double> x, const YinArgs& args) {
  std::vector<double> f0(args.starts.size());
  std::vector<double> scratch;
  const std::size_t len = args.window + args.tau_max;
  for (std::size_t i = 0; i < f0.size(); ++i) f0[i] = yin_estimate(x.subspan(args.starts[i], len), args, scratch);
  return f0;
}

std::vector<double> rms(std::span<const double> x, const RmsArgs& args) {
  std::vector<double> out(args.starts.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rms_frame(x, args, i);
  return out;
}

Matrix euclidean_cost(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) cost_row(a, b, i, out);
  return out;
}

}  // namespace serial

namespace omp {

Matrix log_mel(std::span<const double> x, const MelArgs& args) {
  Matrix out(args.n_frames, args.filters.size());
  const fftw_plan plan = detail::r2c_plan(args.n_fft);
  const auto n = static_cast<long>(args.n_frames);
#pragma omp parallel
  {
    detail::FftWorkspace ws(args.n_fft);
    std::vector<double> power(args.n_fft / 2 + 1);
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      const auto row = static_cast<std::size_t>(i);
      mel_frame(x, args, plan, row, ws, power, out.row(row));
    }
  }
  return out;
}

std::vector<double> yin(std::span<const double> x, const YinArgs& args) {
  std::vector<double> f0(args.starts.size());
  const std::size_t len = args.window + args.tau_max;
  const auto n = static_cast<long>(f0.size());
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 8)
    for (long i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      f0[k] = yin_estimate(x.subspan(args.starts[k], len), args, scratch);
    }
  }
  return f0;
}

std::vector<double> rms(std::span<const double> x, const RmsArgs& args) {
  std::vector<double> out(args.starts.size());
  const auto n = static_cast<long>(out.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = rms_frame(x, args, static_cast<std::size_t>(i));
  return out;
}

Matrix euclidean_cost(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  const auto n = static_cast<long>(a.rows());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) cost_row(a, b, static_cast<std::size_t>(i), out);
  return out;
}

}  // namespace omp
}  // namespace prosodykit::kernels
