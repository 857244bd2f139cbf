#include "prosodykit/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "prosodykit/error.hpp"

namespace prosodykit {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0));
}

std::size_t FrameSpec::frame_samples(int sample_rate) const {
  return std::max<std::size_t>(1, ms_to_samples(frame_length_ms, sample_rate));
}

std::size_t FrameSpec::hop_samples(int sample_rate) const {
  return std::max<std::size_t>(1, ms_to_samples(hop_ms, sample_rate));
}

void FrameSpec::validate() const {
  if (!(hop_ms > 0.0) || !(hop_ms <= frame_length_ms))
    throw Error(ErrorCode::InvalidSpec, "frame spec requires 0 < hop_ms <= frame_length_ms");
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

std::size_t frame_count(std::size_t n_samples, std::size_t frame_len, std::size_t hop) {
  if (n_samples < frame_len || hop == 0) return 0;
  return (n_samples - frame_len) / hop + 1;
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw Error(ErrorCode::CorruptHeader, "missing RIFF/WAVE signature");

  FormatChunk fmt;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (chunk_size > bytes.size() - body)
      throw Error(ErrorCode::CorruptHeader, "chunk extends past end of file");

    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16) throw Error(ErrorCode::CorruptHeader, "fmt chunk too small");
      fmt.format = read_u16(bytes, body);
      fmt.channels = read_u16(bytes, body + 2);
      fmt.sample_rate = read_u32(bytes, body + 4);
      fmt.block_align = read_u16(bytes, body + 12);
      fmt.bits = read_u16(bytes, body + 14);
      if (fmt.format == kFormatExtensible) {
        if (chunk_size < 40) throw Error(ErrorCode::CorruptHeader, "extensible fmt chunk too small");
        // first two bytes of the sub-format GUID carry the actual format tag
        fmt.format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, chunk_size);
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }

  if (!have_fmt || !have_data) throw Error(ErrorCode::CorruptHeader, "missing fmt or data chunk");
  if (fmt.channels == 0 || fmt.sample_rate == 0)
    throw Error(ErrorCode::CorruptHeader, "zero channels or sample rate");

  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool float32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !float32)
    throw Error(ErrorCode::UnsupportedEncoding,
                "format tag " + std::to_string(fmt.format) + " with " + std::to_string(fmt.bits) +
                    " bits per sample");

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  if (fmt.block_align != frame_bytes) throw Error(ErrorCode::CorruptHeader, "block align mismatch");

  AudioBuffer out;
  out.sample_rate = static_cast<int>(fmt.sample_rate);
  const std::size_t n = data.size() / frame_bytes;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      const std::size_t at = i * frame_bytes + c * bytes_per_sample;
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(read_u16(data, at)) / 32768.0;
      } else {
        const std::uint32_t raw = read_u32(data, at);
        float f;
        std::memcpy(&f, &raw, sizeof f);
        v = f;
        if (!std::isfinite(v)) {
          v = 0.0;
          ++out.clipped;
        } else if (v > 1.0 || v < -1.0) {
          v = std::clamp(v, -1.0, 1.0);
          ++out.clipped;
        }
      }
      acc += v;
    }
    out.samples[i] = acc / fmt.channels;
  }
  return out;
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer) {
  if (buffer.empty()) throw Error(ErrorCode::IoError, "refusing to write an empty buffer");
  if (buffer.sample_rate <= 0) throw Error(ErrorCode::IoError, "invalid sample rate");

  const auto data_bytes = static_cast<std::uint32_t>(buffer.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double x : buffer.samples) {
    // Same scale as decoding, so a round trip is off by at most half an LSB
    // except at +1.0, which saturates to 32767.
    const double scaled = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

AudioBuffer load_wav(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

void save_wav(const AudioBuffer& buffer, const std::filesystem::path& path) {
  const auto bytes = encode_wav(buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::vector<std::vector<double>> frame_signal(const AudioBuffer& buffer, const FrameSpec& spec) {
  spec.validate();
  const std::size_t len = spec.frame_samples(buffer.sample_rate);
  const std::size_t hop = spec.hop_samples(buffer.sample_rate);
  const std::size_t n = frame_count(buffer.size(), len, hop);
  if (n == 0) throw Error(ErrorCode::BufferTooShort, "buffer shorter than one frame");

  const auto window = hann_window(len);
  std::vector<std::vector<double>> frames(n, std::vector<double>(len));
  for (std::size_t i = 0; i < n; ++i) {
    const double* src = buffer.samples.data() + i * hop;
    for (std::size_t k = 0; k < len; ++k) frames[i][k] = src[k] * window[k];
  }
  return frames;
}

}  // namespace prosodykit
