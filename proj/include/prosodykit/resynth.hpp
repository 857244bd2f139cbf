#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "prosodykit/alignment.hpp"
#include "prosodykit/audio.hpp"
#include "prosodykit/dsp.hpp"
#include "prosodykit/prosody.hpp"

namespace prosodykit {

// Glottal epochs (voiced) or uniform 5 ms anchors (unvoiced) in the base
// recording, plus unvoiced anchors on the first and last sample. `periods`
// holds the local period in samples for each mark.
struct PitchMarks {
  std::vector<std::size_t> positions;
  std::vector<bool> voiced_flags;
  std::vector<double> periods;

  std::size_t size() const noexcept { return positions.size(); }
};

PitchMarks find_pitch_marks(const AudioBuffer& buffer, const FrameTrack& track, const PitchSpec& pitch = {});

struct PhonePlan {
  std::string label;
  double duration_s = 0.0;      // target
  double duration_ratio = 1.0;  // target / base
  double f0_target_hz = 0.0;    // 0 keeps the phone unvoiced
  double energy_gain = 1.0;     // target / base RMS
  double base_f0_hz = 0.0;
  double base_energy = 0.0;
  std::size_t src_begin = 0;  // sample range in the base recording
  std::size_t src_end = 0;
};

struct SynthesisPlan {
  int sample_rate = 0;
  std::size_t base_samples = 0;
  PitchSpec pitch;
  std::vector<PhonePlan> phones;
};

// Derives per-phone modification targets by comparing `target` with the
// prosody the base recording actually has.
SynthesisPlan plan_synthesis(const AudioBuffer& base_audio, const PhoneAlignment& base_align,
                             const ProsodyTrack& target, const PitchSpec& pitch = {});
// Same, reusing an already computed track of the base recording.
SynthesisPlan plan_synthesis(const AudioBuffer& base_audio, const PhoneAlignment& base_align,
                             const ProsodyTrack& target, const FrameTrack& base_track, const PitchSpec& pitch);

struct Resynthesis {
  AudioBuffer audio;
  PhoneAlignment alignment;  // where each phone landed in the output
  std::size_t soft_clipped = 0;
};

// Pitch-synchronous overlap-add. Grains are two local periods long
// (asymmetric Hann halves reaching the neighbouring marks); per-phone gains
// are refined against the measured output energy.
Resynthesis resynthesize(const AudioBuffer& base_audio, const PitchMarks& marks, const SynthesisPlan& plan);

// plan_synthesis + find_pitch_marks + resynthesize.
Resynthesis resynthesize_prosody(const AudioBuffer& base_audio, const PhoneAlignment& base_align,
                                 const ProsodyTrack& target, const PitchSpec& pitch = {});

}  // namespace prosodykit
