#include "prosodykit/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "prosodykit/error.hpp"
#include "prosodykit/kernels.hpp"

namespace prosodykit {
namespace {

std::vector<std::size_t> centered_starts(std::size_t n_samples, std::size_t len, std::size_t hop) {
  const std::size_t n = centered_frame_count(n_samples, hop);
  std::vector<std::size_t> starts(n);
  const auto last = static_cast<long long>(n_samples - len);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = static_cast<long long>(i * hop) - static_cast<long long>(len / 2);
    starts[i] = static_cast<std::size_t>(std::clamp(s, 0LL, last));
  }
  return starts;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void PitchSpec::validate(int sample_rate) const {
  if (!(f0_floor > 0.0) || !(f0_floor < f0_ceil) || f0_ceil > sample_rate / 2.0)
    throw Error(ErrorCode::InvalidSpec, "pitch range must satisfy 0 < f0_floor < f0_ceil <= Nyquist");
  if (!(voicing_threshold > 0.0 && voicing_threshold < 1.0))
    throw Error(ErrorCode::InvalidSpec, "voicing_threshold must lie in (0, 1)");
  if (!(hop_ms > 0.0) || !(energy_frame_ms > 0.0))
    throw Error(ErrorCode::InvalidSpec, "hop and energy frame must be positive");
}

std::vector<MelFilter> mel_filterbank(std::size_t n_fft, int sample_rate, std::size_t n_mels, double fmin,
                                      double fmax) {
  const std::size_t n_bins = n_fft / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);

  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));

  std::vector<MelFilter> bank(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    std::vector<double> full(n_bins, 0.0);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f > lo && f <= centre)
        full[k] = (f - lo) / (centre - lo);
      else if (f > centre && f < hi)
        full[k] = (hi - f) / (hi - centre);
    }
    double sum = 0.0;
    for (double w : full) sum += w;
    if (sum <= 0.0) {
      // narrower than one bin: fall back to the bin nearest the centre
      const auto k = std::min(n_bins - 1, static_cast<std::size_t>(std::lround(centre / bin_hz)));
      full[k] = 1.0;
      sum = 1.0;
    }
    std::size_t first = 0;
    while (full[first] == 0.0) ++first;
    std::size_t last = n_bins - 1;
    while (full[last] == 0.0) --last;
    bank[m].first_bin = first;
    for (std::size_t k = first; k <= last; ++k) bank[m].weights.push_back(full[k] / sum);
  }
  return bank;
}

Matrix log_mel_spectrogram(const AudioBuffer& buffer, const MelSpec& spec, const FrameSpec& frames) {
  frames.validate();
  const int sr = buffer.sample_rate;
  const std::size_t len = frames.frame_samples(sr);
  const std::size_t hop = frames.hop_samples(sr);
  const std::size_t n_fft = spec.n_fft ? spec.n_fft : next_pow2(len);
  const double fmax = spec.fmax > 0.0 ? spec.fmax : sr / 2.0;

  if (n_fft < len) throw Error(ErrorCode::InvalidSpec, "n_fft shorter than the frame");
  if (spec.n_mels < 1) throw Error(ErrorCode::InvalidSpec, "n_mels must be >= 1");
  if (!(spec.log_floor > 0.0)) throw Error(ErrorCode::InvalidSpec, "log_floor must be positive");
  if (!(spec.fmin >= 0.0 && spec.fmin < fmax)) throw Error(ErrorCode::InvalidSpec, "fmin must lie in [0, fmax)");
  if (fmax > sr / 2.0) throw Error(ErrorCode::InvalidSpec, "fmax above Nyquist");

  const std::size_t n = frame_count(buffer.size(), len, hop);
  if (n == 0) throw Error(ErrorCode::BufferTooShort, "buffer shorter than one analysis frame");

  const auto window = hann_window(len);
  const auto bank = mel_filterbank(n_fft, sr, spec.n_mels, spec.fmin, fmax);
  kernels::MelArgs args{len, hop, n, n_fft, spec.log_floor, window, bank};
  return kernels::omp::log_mel(buffer.samples, args);
}

std::vector<double> frame_energy(const AudioBuffer& buffer, const FrameSpec& frames) {
  frames.validate();
  const std::size_t len = frames.frame_samples(buffer.sample_rate);
  const std::size_t hop = frames.hop_samples(buffer.sample_rate);
  const std::size_t n = frame_count(buffer.size(), len, hop);
  if (n == 0) throw Error(ErrorCode::BufferTooShort, "buffer shorter than one frame");
  std::vector<std::size_t> starts(n);
  for (std::size_t i = 0; i < n; ++i) starts[i] = i * hop;
  const auto window = hann_window(len);
  return kernels::omp::rms(buffer.samples, {window, starts});
}

std::size_t centered_frame_count(std::size_t n_samples, std::size_t hop) {
  return n_samples == 0 ? 0 : (n_samples - 1) / hop + 1;
}

std::vector<double> centered_frame_energy(const AudioBuffer& buffer, double frame_length_ms, double hop_ms) {
  if (buffer.empty()) throw Error(ErrorCode::BufferTooShort, "empty buffer");
  const std::size_t len = std::min(buffer.size(), std::max<std::size_t>(1, ms_to_samples(frame_length_ms, buffer.sample_rate)));
  const std::size_t hop = std::max<std::size_t>(1, ms_to_samples(hop_ms, buffer.sample_rate));
  const auto starts = centered_starts(buffer.size(), len, hop);
  const auto window = hann_window(len);
  return kernels::omp::rms(buffer.samples, {window, starts});
}

FrameTrack track_pitch(const AudioBuffer& buffer, const PitchSpec& spec) {
  const int sr = buffer.sample_rate;
  spec.validate(sr);
  const auto period_max = static_cast<std::size_t>(std::ceil(sr / spec.f0_floor));
  const std::size_t seg_len = 2 * period_max;
  if (buffer.size() < seg_len)
    throw Error(ErrorCode::BufferTooShort, "pitch tracking needs at least two periods of f0_floor");

  const std::size_t hop = std::max<std::size_t>(1, ms_to_samples(spec.hop_ms, sr));
  const auto starts = centered_starts(buffer.size(), seg_len, hop);

  kernels::YinArgs args;
  args.sample_rate = sr;
  args.window = period_max;
  args.tau_max = period_max;
  args.tau_min = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(sr / spec.f0_ceil)));
  args.threshold = spec.voicing_threshold;
  args.f0_floor = spec.f0_floor;
  args.f0_ceil = spec.f0_ceil;
  args.starts = starts;
  const auto raw = kernels::omp::yin(buffer.samples, args);

  FrameTrack track;
  track.hop_ms = 1000.0 * static_cast<double>(hop) / sr;
  track.f0_hz = raw;
  for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
    if (raw[i] > 0.0 && raw[i - 1] > 0.0 && raw[i + 1] > 0.0) {
      double v[3] = {raw[i - 1], raw[i], raw[i + 1]};
      std::sort(v, v + 3);
      track.f0_hz[i] = v[1];
    }
  }
  track.energy = centered_frame_energy(buffer, spec.energy_frame_ms, track.hop_ms);
  return track;
}

}  // namespace prosodykit
