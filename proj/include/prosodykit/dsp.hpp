#pragma once

#include <cstddef>
#include <vector>

#include "prosodykit/audio.hpp"
#include "prosodykit/matrix.hpp"

namespace prosodykit {

// Log-mel analysis parameters. Zero for n_fft or fmax selects the default
// (next power of two >= frame length, Nyquist) at time of use.
struct MelSpec {
  std::size_t n_fft = 0;
  std::size_t n_mels = 80;
  double fmin = 0.0;
  double fmax = 0.0;
  double log_floor = 1e-10;
};

struct PitchSpec {
  double f0_floor = 60.0;
  double f0_ceil = 400.0;
  double voicing_threshold = 0.15;
  double hop_ms = 10.0;
  // Window used for the per-frame energy that accompanies the F0 contour.
  double energy_frame_ms = 25.0;

  void validate(int sample_rate) const;
};

// Per-frame F0 and energy of one utterance. Frame i is centred on time
// i * hop_ms; f0_hz[i] == 0 marks an unvoiced frame.
struct FrameTrack {
  std::vector<double> f0_hz;
  std::vector<double> energy;
  double hop_ms = 10.0;

  std::size_t n_frames() const noexcept { return f0_hz.size(); }
  double duration_s() const noexcept { return static_cast<double>(f0_hz.size()) * hop_ms / 1000.0; }
  bool voiced(std::size_t i) const { return f0_hz[i] > 0.0; }

  friend bool operator==(const FrameTrack&, const FrameTrack&) = default;
};

// Triangular mel filters, each normalised to unit sum.
struct MelFilter {
  std::size_t first_bin = 0;
  std::vector<double> weights;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);
std::size_t next_pow2(std::size_t n);

std::vector<MelFilter> mel_filterbank(std::size_t n_fft, int sample_rate, std::size_t n_mels, double fmin,
                                      double fmax);

// Entry (i, m) = ln(max(log_floor, band-m energy of frame i)).
Matrix log_mel_spectrogram(const AudioBuffer& buffer, const MelSpec& spec, const FrameSpec& frames = {});

// RMS of each Hann-windowed frame on the FrameSpec grid.
std::vector<double> frame_energy(const AudioBuffer& buffer, const FrameSpec& frames = {});

// Frames centred on i * hop: ceil(N / hop) of them.
std::size_t centered_frame_count(std::size_t n_samples, std::size_t hop);

// RMS of Hann-windowed frames centred on i * hop. Frames that would cross
// the buffer edge are shifted inward.
std::vector<double> centered_frame_energy(const AudioBuffer& buffer, double frame_length_ms, double hop_ms);

// Cumulative-mean-normalised difference function pitch tracker with a
// 3-frame median smoother over voiced runs.
FrameTrack track_pitch(const AudioBuffer& buffer, const PitchSpec& spec = {});

}  // namespace prosodykit
