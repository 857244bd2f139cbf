// Serial reference vs OpenMP kernels on a minute of noisy harmonic audio.
//   bench_kernels [seconds=60] [repeats=3]

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>

#include "prosodykit/dsp.hpp"
#include "prosodykit/kernels.hpp"

using namespace prosodykit;
namespace k = prosodykit::kernels;

namespace {

std::vector<double> signal(std::size_t n, int sr) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.02);
  std::vector<double> x(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    phase += 2 * std::numbers::pi * (140.0 + 30.0 * std::sin(2 * std::numbers::pi * 0.7 * t)) / sr;
    x[i] = 0.3 * std::sin(phase) + 0.1 * std::sin(2 * phase) + g(rng);
  }
  return x;
}

double best_ms(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

template <typename Serial, typename Parallel>
void row(const char* name, int repeats, Serial serial, Parallel parallel) {
  const bool same = serial() == parallel();
  const double s = best_ms(repeats, [&] { (void)serial(); });
  const double p = best_ms(repeats, [&] { (void)parallel(); });
  std::printf("%-16s %10.1f %10.1f %8.2fx  %s\n", name, s, p, s / p, same ? "identical" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  const double seconds = argc > 1 ? std::atof(argv[1]) : 60.0;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  constexpr int sr = 16000;
  const auto x = signal(static_cast<std::size_t>(seconds * sr), sr);

  const auto window = hann_window(400);
  const auto bank = mel_filterbank(512, sr, 80, 0.0, sr / 2.0);
  const k::MelArgs mel{400, 160, frame_count(x.size(), 400, 160), 512, 1e-10, window, bank};

  std::vector<std::size_t> yin_starts, rms_starts;
  for (std::size_t s = 0; s + 534 <= x.size(); s += 160) yin_starts.push_back(s);
  for (std::size_t s = 0; s + 400 <= x.size(); s += 160) rms_starts.push_back(s);
  k::YinArgs yin;
  yin.sample_rate = sr;
  yin.window = 267;
  yin.tau_max = 267;
  yin.tau_min = 40;
  yin.f0_floor = 60.0;
  yin.f0_ceil = 400.0;
  yin.starts = yin_starts;
  const k::RmsArgs rms{window, rms_starts};

  Matrix a(3000, 80), b(3000, 80);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < 3000; ++i)
    for (std::size_t c = 0; c < 80; ++c) {
      a(i, c) = g(rng);
      b(i, c) = g(rng);
    }

  std::printf("%.0f s of audio, %d threads, best of %d\n", seconds, omp_get_max_threads(), repeats);
  std::printf("%-16s %10s %10s %9s\n", "kernel", "serial ms", "omp ms", "speedup");
  row("log_mel", repeats, [&] { return k::serial::log_mel(x, mel); }, [&] { return k::omp::log_mel(x, mel); });
  row("yin", repeats, [&] { return k::serial::yin(x, yin); }, [&] { return k::omp::yin(x, yin); });
  row("rms", repeats, [&] { return k::serial::rms(x, rms); }, [&] { return k::omp::rms(x, rms); });
  row("euclidean_cost", repeats, [&] { return k::serial::euclidean_cost(a, b); },
      [&] { return k::omp::euclidean_cost(a, b); });
  return 0;
}
