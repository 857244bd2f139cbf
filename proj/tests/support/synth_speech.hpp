#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prosodykit/alignment.hpp"
#include "prosodykit/audio.hpp"

namespace prosodykit::testing {

// One phone of a synthetic utterance. f0_hz == 0 renders shaped noise;
// amplitude is the target RMS of the phone's steady state.
struct SynthPhone {
  std::string label;
  double duration_s = 0.1;
  double f0_hz = 0.0;
  double amplitude = 0.1;
};

struct SynthSpeech {
  AudioBuffer audio;
  PhoneAlignment alignment;  // exact boundaries of the rendered phones
};

// Harmonic source shaped by per-phone formants, smooth F0/amplitude
// transitions across boundaries, deterministic for a given seed.
SynthSpeech render_speech(const std::vector<SynthPhone>& phones, int sample_rate = 16000, std::uint64_t seed = 1);

// Deterministic "sentence" number `index`: leading and trailing silence
// around 5-8 CV syllables.
std::vector<SynthPhone> make_sentence(std::uint64_t index);

// Same labels, independently jittered F0 (x0.8-1.25), duration (x0.75-1.3)
// and amplitude (x0.7-1.4) per phone: a second rendition of the sentence.
std::vector<SynthPhone> perturb_prosody(const std::vector<SynthPhone>& phones, std::uint64_t seed);

// Steady vowel of constant F0.
SynthSpeech render_vowel(double f0_hz, double duration_s, int sample_rate = 16000, double amplitude = 0.2);

std::vector<double> sine(double freq_hz, double amplitude, std::size_t n, int sample_rate);

}  // namespace prosodykit::testing
