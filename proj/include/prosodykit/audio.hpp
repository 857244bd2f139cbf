#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace prosodykit {

// Mono PCM waveform. Samples are in [-1, 1]; values outside that range found
// while decoding are clamped and counted in `clipped`.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 0;
  std::size_t clipped = 0;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

enum class Window { hann };

struct FrameSpec {
  double frame_length_ms = 25.0;
  double hop_ms = 10.0;
  Window window = Window::hann;

  std::size_t frame_samples(int sample_rate) const;
  std::size_t hop_samples(int sample_rate) const;
  void validate() const;
};

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

std::size_t ms_to_samples(double ms, int sample_rate);

// Number of full frames: floor((N - L) / H) + 1, or 0 when N < L.
std::size_t frame_count(std::size_t n_samples, std::size_t frame_len, std::size_t hop);

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer);

AudioBuffer load_wav(const std::filesystem::path& path);
void save_wav(const AudioBuffer& buffer, const std::filesystem::path& path);

// Frame i covers samples [i*hop, i*hop + frame_length), multiplied by the window.
std::vector<std::vector<double>> frame_signal(const AudioBuffer& buffer, const FrameSpec& spec);

}  // namespace prosodykit
