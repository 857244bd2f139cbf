#include "prosodykit/resynth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prosodykit/error.hpp"

namespace prosodykit {
namespace {

constexpr double kUnvoicedSpacingMs = 5.0;
constexpr double kCrossfadeMs = 5.0;
constexpr int kGainPasses = 3;
// Relative energy error below which a phone's gain is left alone.
constexpr double kGainDeadband = 0.005;
constexpr int kPitchPasses = 3;
// Relative F0 error below which a phone's pitch factor is left alone.
constexpr double kPitchDeadband = 0.005;
// Pitch factors move log-linearly over this span either side of a boundary.
constexpr double kPitchGlideMs = 10.0;
constexpr double kSoftClipKnee = 0.9;

// Zero-phase moving average over ~1 ms.
std::vector<double> lowpass(const std::vector<double>& x, int sample_rate) {
  const std::size_t half = std::max<std::size_t>(1, static_cast<std::size_t>(sample_rate / 2000));
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size(), i + half + 1);
    y[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return y;
}

// F0 at an arbitrary sample, read off the frame track (frame i centred on i*hop).
class LocalPitch {
 public:
  LocalPitch(const FrameTrack& track, int sample_rate)
      : track_(track), hop_(static_cast<double>(ms_to_samples(track.hop_ms, sample_rate))) {}

  double f0_at(std::size_t n) const {
    const std::size_t last = track_.n_frames() - 1;
    const double pos = static_cast<double>(n) / hop_;
    const auto nearest = std::min(last, static_cast<std::size_t>(std::lround(pos)));
    if (track_.f0_hz[nearest] <= 0.0) return 0.0;
    const auto j = std::min(last, static_cast<std::size_t>(pos));
    const std::size_t k = std::min(last, j + 1);
    const double a = track_.f0_hz[j], b = track_.f0_hz[k];
    if (a > 0.0 && b > 0.0) return a + (b - a) * (pos - static_cast<double>(j));
    return track_.f0_hz[nearest];
  }

 private:
  const FrameTrack& track_;
  double hop_;
};

struct Segment {
  std::size_t in_begin, in_end;
  std::size_t out_begin, out_end;
  double pitch_factor;
  double gain;
  double target_energy;  // 0: leave the gain alone
  bool is_phone;
};

std::vector<double> gain_curve(const std::vector<Segment>& segs, std::size_t n, int sample_rate) {
  std::vector<double> g(n, 1.0);
  for (const auto& s : segs)
    for (std::size_t i = s.out_begin; i < s.out_end && i < n; ++i) g[i] = s.gain;
  const std::size_t fade = ms_to_samples(kCrossfadeMs, sample_rate);
  for (std::size_t k = 1; k < segs.size(); ++k) {
    const auto& a = segs[k - 1];
    const auto& b = segs[k];
    const std::size_t half = std::min({fade / 2, a.out_end - a.out_begin, b.out_end - b.out_begin});
    if (half == 0 || a.gain == b.gain) continue;
    const std::size_t lo = b.out_begin - half;
    const std::size_t hi = std::min(n, b.out_begin + half);
    for (std::size_t i = lo; i < hi; ++i) {
      const double t = (static_cast<double>(i - lo) + 0.5) / static_cast<double>(2 * half);
      g[i] = a.gain + (b.gain - a.gain) * t;
    }
  }
  return g;
}

std::vector<double> phone_energies(const std::vector<double>& y, int sample_rate, const PhoneAlignment& align,
                                   const PitchSpec& pitch) {
  AudioBuffer buf{y, sample_rate, 0};
  const auto energy = centered_frame_energy(buf, pitch.energy_frame_ms, pitch.hop_ms);
  const double hop_ms = 1000.0 * static_cast<double>(ms_to_samples(pitch.hop_ms, sample_rate)) / sample_rate;
  std::vector<double> out(align.size());
  for (std::size_t k = 0; k < align.size(); ++k) {
    const auto r = frames_for_phone(align, k, hop_ms, energy.size());
    double acc = 0.0;
    for (std::size_t i = r.begin; i < r.end; ++i) acc += energy[i];
    out[k] = acc / static_cast<double>(r.size());
  }
  return out;
}

std::size_t soft_clip(std::vector<double>& y) {
  std::size_t over = 0;
  for (double v : y)
    if (std::abs(v) > 1.0) ++over;
  if (over == 0) return 0;
  const double room = 1.0 - kSoftClipKnee;
  for (double& v : y) {
    const double a = std::abs(v);
    if (a > kSoftClipKnee) v = std::copysign(kSoftClipKnee + room * std::tanh((a - kSoftClipKnee) / room), v);
  }
  return over;
}

}  // namespace

PitchMarks find_pitch_marks(const AudioBuffer& buffer, const FrameTrack& track, const PitchSpec& pitch) {
  if (buffer.empty() || track.n_frames() == 0) throw Error(ErrorCode::EmptyInput, "no samples or frames");
  const int sr = buffer.sample_rate;
  const std::size_t N = buffer.size();
  const double p_min = sr / pitch.f0_ceil;
  const double p_max = sr / pitch.f0_floor;
  const std::size_t unvoiced_step = std::max<std::size_t>(1, ms_to_samples(kUnvoicedSpacingMs, sr));
  const auto lp = lowpass(buffer.samples, sr);
  const LocalPitch local(track, sr);

  const auto argmax = [&](std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t i = lo + 1; i < hi; ++i)
      if (lp[i] > lp[best]) best = i;
    return best;
  };

  PitchMarks marks;
  std::size_t next = 0;
  bool last_voiced = false;
  std::size_t last = 0;
  while (next < N) {
    const double f0 = local.f0_at(next);
    if (f0 > 0.0) {
      const double period = std::clamp(sr / f0, p_min, p_max);
      std::size_t lo, hi;
      if (!last_voiced) {
        lo = next;
        hi = next + static_cast<std::size_t>(std::ceil(period));
      } else {
        lo = last + static_cast<std::size_t>(std::ceil(std::max(p_min, 0.8 * period)));
        hi = last + static_cast<std::size_t>(std::floor(std::min(p_max, 1.2 * period))) + 1;
      }
      if (lo >= N) break;
      hi = std::min(hi, N);
      const std::size_t m = argmax(lo, std::max(hi, lo + 1));
      marks.positions.push_back(m);
      marks.voiced_flags.push_back(true);
      marks.periods.push_back(period);
      last = m;
      last_voiced = true;
      next = m + static_cast<std::size_t>(std::lround(period));
    } else {
      if (!marks.positions.empty() && next <= last) next = last + 1;
      marks.positions.push_back(next);
      marks.voiced_flags.push_back(false);
      marks.periods.push_back(static_cast<double>(unvoiced_step));
      last = next;
      last_voiced = false;
      next += unvoiced_step;
    }
  }
  // anchors on both buffer edges so the grain windows sum to one everywhere
  if (marks.positions.front() > 0) {
    marks.positions.insert(marks.positions.begin(), 0);
    marks.voiced_flags.insert(marks.voiced_flags.begin(), false);
    marks.periods.insert(marks.periods.begin(), static_cast<double>(unvoiced_step));
  }
  if (marks.positions.back() + 1 < N) {
    marks.positions.push_back(N - 1);
    marks.voiced_flags.push_back(false);
    marks.periods.push_back(static_cast<double>(unvoiced_step));
  }
  return marks;
}

SynthesisPlan plan_synthesis(const AudioBuffer& base_audio, const PhoneAlignment& base_align,
                             const ProsodyTrack& target, const PitchSpec& pitch) {
  return plan_synthesis(base_audio, base_align, target, track_pitch(base_audio, pitch), pitch);
}

SynthesisPlan plan_synthesis(const AudioBuffer& base_audio, const PhoneAlignment& base_align,
                             const ProsodyTrack& target, const FrameTrack& base_track, const PitchSpec& pitch) {
  if (target.normalized)
    throw Error(ErrorCode::NormalizedTrack, "resynthesis needs absolute prosody; denormalise first");
  require_same_phones(base_align.labels(), target.labels());
  target.validate();
  const ProsodyTrack base = average_per_phone(base_track, base_align);

  SynthesisPlan plan;
  plan.sample_rate = base_audio.sample_rate;
  plan.base_samples = base_audio.size();
  plan.pitch = pitch;
  const double sr = base_audio.sample_rate;
  for (std::size_t k = 0; k < base.size(); ++k) {
    const auto& b = base.phones[k];
    const auto& t = target.phones[k];
    PhonePlan p;
    p.label = t.label;
    p.duration_s = t.duration_s;
    p.duration_ratio = t.duration_s / b.duration_s;
    p.base_f0_hz = b.f0;
    p.base_energy = b.energy;
    // an unvoiced source cannot be given a pitch; a voiced one asked for 0 keeps its own
    p.f0_target_hz = b.f0 > 0.0 ? (t.f0 > 0.0 ? t.f0 : b.f0) : 0.0;
    p.energy_gain = b.energy > 0.0 ? t.energy / b.energy : 1.0;
    p.src_begin = std::min(base_audio.size(), static_cast<std::size_t>(std::llround(base_align[k].start_s * sr)));
    p.src_end = std::min(base_audio.size(), static_cast<std::size_t>(std::llround(base_align[k].end_s * sr)));
    plan.phones.push_back(std::move(p));
  }
  return plan;
}

Resynthesis resynthesize(const AudioBuffer& base_audio, const PitchMarks& marks, const SynthesisPlan& plan) {
  const int sr = base_audio.sample_rate;
  const std::size_t N = base_audio.size();
  if (plan.sample_rate != sr || plan.base_samples != N)
    throw Error(ErrorCode::PlanMismatch, "plan was built for a different recording");
  if (plan.phones.empty() || marks.size() == 0) throw Error(ErrorCode::PlanMismatch, "empty plan or no pitch marks");

  // Segments: optional lead-in, one per phone, optional tail, all contiguous in the input.
  std::vector<Segment> segs;
  std::size_t out_pos = 0;
  const auto push = [&](std::size_t in_b, std::size_t in_e, std::size_t out_len, double factor, double gain,
                        double target_energy, bool is_phone) {
    segs.push_back({in_b, in_e, out_pos, out_pos + out_len, factor, gain, target_energy, is_phone});
    out_pos += out_len;
  };
  const std::size_t first_in = plan.phones.front().src_begin;
  if (first_in > 0) push(0, first_in, first_in, 1.0, 1.0, 0.0, false);
  double cum_s = 0.0;
  const std::size_t phones_out_begin = out_pos;
  std::size_t expected_in = first_in;
  for (const auto& p : plan.phones) {
    if (p.src_begin != expected_in || p.src_end <= p.src_begin || p.src_end > N)
      throw Error(ErrorCode::PlanMismatch, "phone source ranges must be contiguous and inside the recording");
    expected_in = p.src_end;
    cum_s += p.duration_s;
    const auto end = phones_out_begin + static_cast<std::size_t>(std::llround(cum_s * sr));
    const std::size_t len = std::max<std::size_t>(1, end > out_pos ? end - out_pos : 0);
    const double factor = (p.f0_target_hz > 0.0 && p.base_f0_hz > 0.0) ? p.f0_target_hz / p.base_f0_hz : 1.0;
    push(p.src_begin, p.src_end, len, factor, 1.0, p.base_energy > 0.0 ? p.base_energy * p.energy_gain : 0.0, true);
  }
  if (expected_in < N) push(expected_in, N, N - expected_in, 1.0, 1.0, 0.0, false);
  const std::size_t out_len = out_pos;

  // grain extents reach the neighbouring marks
  const std::size_t M = marks.size();
  const double cap = sr / plan.pitch.f0_floor + static_cast<double>(ms_to_samples(kUnvoicedSpacingMs, sr));
  std::vector<double> left(M), right(M);
  for (std::size_t m = 0; m < M; ++m) {
    if (m + 1 < M) right[m] = static_cast<double>(marks.positions[m + 1] - marks.positions[m]);
    if (m > 0) left[m] = static_cast<double>(marks.positions[m] - marks.positions[m - 1]);
  }
  if (M == 1) left[0] = right[0] = marks.periods[0];
  else {
    left[0] = right[0];
    right[M - 1] = left[M - 1];
  }
  for (std::size_t m = 0; m < M; ++m) {
    left[m] = std::min(left[m], cap);
    right[m] = std::min(right[m], cap);
  }

  const auto seg_of_out = [&](std::size_t t) {
    auto it = std::upper_bound(segs.begin(), segs.end(), t, [](std::size_t v, const Segment& s) { return v < s.out_end; });
    return it == segs.end() ? segs.size() - 1 : static_cast<std::size_t>(it - segs.begin());
  };
  const auto in_to_out = [&](std::size_t in) {
    for (const auto& s : segs) {
      if (in < s.in_end) {
        const double frac = static_cast<double>(in - s.in_begin) / static_cast<double>(s.in_end - s.in_begin);
        return s.out_begin + static_cast<std::size_t>(std::llround(frac * static_cast<double>(s.out_end - s.out_begin)));
      }
    }
    return out_len;
  };
  const auto nearest_mark = [&](double tau) {
    auto it = std::lower_bound(marks.positions.begin(), marks.positions.end(), tau,
                               [](std::size_t p, double v) { return static_cast<double>(p) < v; });
    std::size_t idx = static_cast<std::size_t>(it - marks.positions.begin());
    if (idx == M) return M - 1;
    if (idx > 0 && tau - static_cast<double>(marks.positions[idx - 1]) <= static_cast<double>(marks.positions[idx]) - tau)
      return idx - 1;
    return idx;
  };

  const double glide = kPitchGlideMs * sr / 1000.0;
  const auto factor_at = [&](std::size_t ts) {
    const std::size_t k = seg_of_out(ts);
    const Segment& s = segs[k];
    const double pos = static_cast<double>(ts) + 0.5;
    const auto span = [&](const Segment& a, const Segment& b) {
      return std::min({glide, 0.5 * static_cast<double>(a.out_end - a.out_begin),
                       0.5 * static_cast<double>(b.out_end - b.out_begin)});
    };
    const auto blend = [](const Segment& a, const Segment& b, double u) {
      return std::exp(std::log(a.pitch_factor) + (std::log(b.pitch_factor) - std::log(a.pitch_factor)) * u);
    };
    if (k > 0) {
      const double g = span(segs[k - 1], s);
      const double b = static_cast<double>(s.out_begin);
      if (g > 0.0 && pos < b + g) return blend(segs[k - 1], s, (pos - (b - g)) / (2.0 * g));
    }
    if (k + 1 < segs.size()) {
      const double g = span(s, segs[k + 1]);
      const double e = static_cast<double>(s.out_end);
      if (g > 0.0 && pos > e - g) return blend(s, segs[k + 1], (pos - (e - g)) / (2.0 * g));
    }
    return s.pitch_factor;
  };

  const auto& x = base_audio.samples;
  const auto overlap_add = [&] {
    std::vector<double> y(out_len, 0.0);
    double t = static_cast<double>(in_to_out(marks.positions.front()));
    while (t < static_cast<double>(out_len)) {
      const auto ts = static_cast<std::size_t>(std::llround(t));
      if (ts >= out_len) break;
      const Segment& s = segs[seg_of_out(ts)];
      const double tau = static_cast<double>(s.in_begin) + static_cast<double>(ts - s.out_begin) *
                                                                static_cast<double>(s.in_end - s.in_begin) /
                                                                static_cast<double>(s.out_end - s.out_begin);
      const std::size_t m = nearest_mark(tau);
      const auto centre = static_cast<long long>(marks.positions[m]);
      const auto L = static_cast<long long>(left[m]);
      const auto R = static_cast<long long>(right[m]);
      for (long long d = -L + 1; d < R; ++d) {
        const long long src = centre + d;
        const long long dst = static_cast<long long>(ts) + d;
        if (src < 0 || src >= static_cast<long long>(N) || dst < 0 || dst >= static_cast<long long>(out_len)) continue;
        const double w = d < 0 ? 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(d) / static_cast<double>(L)))
                               : 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(d) / static_cast<double>(R)));
        y[static_cast<std::size_t>(dst)] += w * x[static_cast<std::size_t>(src)];
      }
      const double step = marks.voiced_flags[m] ? right[m] / factor_at(ts) : right[m];
      t += std::max(1.0, step);
    }
    return y;
  };

  Resynthesis result;
  std::vector<Phone> placed;
  for (std::size_t k = 0, p = 0; k < segs.size(); ++k) {
    if (!segs[k].is_phone) continue;
    placed.push_back({plan.phones[p++].label, static_cast<double>(segs[k].out_begin) / sr,
                      static_cast<double>(segs[k].out_end) / sr});
  }
  result.alignment = PhoneAlignment(std::move(placed));

  // Neighbouring grains and the tracker's window smear F0 across phone
  // boundaries; correct each pitch factor by the ratio of target to measured.
  std::vector<double> y = overlap_add();
  for (int pass = 0; pass < kPitchPasses; ++pass) {
    const auto measured = average_per_phone(track_pitch(AudioBuffer{y, sr, 0}, plan.pitch), result.alignment);
    bool changed = false;
    for (std::size_t k = 0, p = 0; k < segs.size(); ++k) {
      if (!segs[k].is_phone) continue;
      const double want = plan.phones[p].f0_target_hz;
      const double got = measured.phones[p++].f0;
      if (want <= 0.0 || got <= 0.0 || std::abs(got - want) <= kPitchDeadband * want) continue;
      segs[k].pitch_factor *= std::clamp(want / got, 0.8, 1.25);
      changed = true;
    }
    if (!changed) break;
    y = overlap_add();
  }

  // Refine per-phone gains until the measured output RMS meets the target.
  std::vector<double> z;
  for (int pass = 0;; ++pass) {
    const auto g = gain_curve(segs, out_len, sr);
    z = y;
    for (std::size_t i = 0; i < out_len; ++i) z[i] *= g[i];
    if (pass == kGainPasses) break;
    const auto measured = phone_energies(z, sr, result.alignment, plan.pitch);
    for (std::size_t k = 0, p = 0; k < segs.size(); ++k) {
      if (!segs[k].is_phone) continue;
      const double e = measured[p++];
      const double want = segs[k].target_energy;
      if (want > 0.0 && e > 0.0 && std::abs(e - want) > kGainDeadband * want) segs[k].gain *= want / e;
    }
  }

  result.soft_clipped = soft_clip(z);
  result.audio = AudioBuffer{std::move(z), sr, 0};
  return result;
}

Resynthesis resynthesize_prosody(const AudioBuffer& base_audio, const PhoneAlignment& base_align,
                                 const ProsodyTrack& target, const PitchSpec& pitch) {
  const auto track = track_pitch(base_audio, pitch);
  const auto plan = plan_synthesis(base_audio, base_align, target, track, pitch);
  const auto marks = find_pitch_marks(base_audio, track, pitch);
  return resynthesize(base_audio, marks, plan);
}

}  // namespace prosodykit
