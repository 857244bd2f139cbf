#pragma once

// Data-parallel inner loops. Each kernel exists twice: a plain serial
// reference and an OpenMP version that distributes independent frames (or
// rows) across threads. Both produce bit-identical results; the public
// analysis functions call the OpenMP versions.

#include <cstddef>
#include <span>
#include <vector>

#include "prosodykit/dsp.hpp"
#include "prosodykit/matrix.hpp"

namespace prosodykit::kernels {

struct MelArgs {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t n_frames = 0;
  std::size_t n_fft = 0;
  double log_floor = 1e-10;
  std::span<const double> window;
  std::span<const MelFilter> filters;
};

struct YinArgs {
  int sample_rate = 0;
  std::size_t window = 0;   // integration length
  std::size_t tau_min = 1;
  std::size_t tau_max = 2;
  double threshold = 0.15;
  double f0_floor = 0.0;
  double f0_ceil = 0.0;
  std::span<const std::size_t> starts;  // first sample of each analysis segment
};

struct RmsArgs {
  std::span<const double> window;
  std::span<const std::size_t> starts;
};

// Pitch estimate for one segment of length window + tau_max; 0 when unvoiced.
double yin_estimate(std::span<const double> segment, const YinArgs& args, std::vector<double>& scratch);

namespace serial {
Matrix log_mel(std::span<const double> x, const MelArgs& args);
std::vector<double> yin(std::span<const double> x, const YinArgs& args);
std::vector<double> rms(std::span<const double> x, const RmsArgs& args);
Matrix euclidean_cost(const Matrix& a, const Matrix& b);
}  // namespace serial

namespace omp {
Matrix log_mel(std::span<const double> x, const MelArgs& args);
std::vector<double> yin(std::span<const double> x, const YinArgs& args);
std::vector<double> rms(std::span<const double> x, const RmsArgs& args);
Matrix euclidean_cost(const Matrix& a, const Matrix& b);
}  // namespace omp

}  // namespace prosodykit::kernels
