#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "prosodykit/metrics.hpp"
#include "prosodykit/resynth.hpp"
#include "synth_speech.hpp"
#include "test_util.hpp"

using namespace prosodykit;
using namespace prosodykit::testing;

namespace {

double median_voiced_f0(const AudioBuffer& a, double from_s, double to_s) {
  const auto tr = track_pitch(a);
  std::vector<double> v;
  for (std::size_t i = 0; i < tr.n_frames(); ++i) {
    const double t = static_cast<double>(i) * tr.hop_ms / 1000.0;
    if (t >= from_s && t < to_s && tr.voiced(i)) v.push_back(tr.f0_hz[i]);
  }
  REQUIRE(!v.empty());
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

ProsodyTrack measured(const SynthSpeech& sp) { return average_per_phone(track_pitch(sp.audio), sp.alignment); }

}  // namespace

TEST_CASE("pitch marks on a 100 Hz sine are one period apart") {
  const AudioBuffer x{sine(100.0, 0.5, 16000, 16000), 16000, 0};
  const auto marks = find_pitch_marks(x, track_pitch(x));
  REQUIRE(marks.size() > 90);
  CHECK(marks.periods.size() == marks.size());
  std::size_t checked = 0;
  for (std::size_t k = 1; k < marks.size(); ++k) {
    CHECK(marks.positions[k] > marks.positions[k - 1]);
    if (marks.positions[k] < 800 || marks.positions[k] > 15200) continue;
    CHECK(marks.voiced_flags[k]);
    const auto gap = marks.positions[k] - marks.positions[k - 1];
    CHECK(gap >= 152);
    CHECK(gap <= 168);
    ++checked;
  }
  CHECK(checked > 80);
}

TEST_CASE("silence gets uniform 5 ms anchors") {
  const AudioBuffer x{std::vector<double>(8000, 0.0), 16000, 0};
  const auto marks = find_pitch_marks(x, track_pitch(x));
  REQUIRE(marks.size() == 101);
  for (std::size_t k = 0; k < marks.size(); ++k) {
    CHECK_FALSE(marks.voiced_flags[k]);
    CHECK(marks.positions[k] == std::min<std::size_t>(80 * k, 7999));
  }
  CHECK(code_of([] { find_pitch_marks(AudioBuffer{{}, 16000, 0}, FrameTrack{}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("resynthesising the measured prosody reproduces the input") {
  const auto sp = render_speech(make_sentence(3));
  const auto out = resynthesize_prosody(sp.audio, sp.alignment, measured(sp));
  REQUIRE(out.audio.size() == sp.audio.size());
  CHECK(out.audio.sample_rate == sp.audio.sample_rate);
  CHECK(out.soft_clipped == 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < out.audio.size(); ++i)
    worst = std::max(worst, std::abs(out.audio.samples[i] - sp.audio.samples[i]));
  CHECK(worst < 1e-9);
  CHECK(msd(sp.audio, out.audio) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out.alignment.labels() == sp.alignment.labels());
}

TEST_CASE("scaling F0 by 1.2 raises the measured pitch by 20%") {
  const auto sp = render_vowel(150.0, 0.6);
  auto target = measured(sp);
  const double base = median_voiced_f0(sp.audio, 0.1, 0.5);
  target = apply_edits(target, {{{EditKind::scale_f0, 0, 1.2}}});
  const auto out = resynthesize_prosody(sp.audio, sp.alignment, target);
  CHECK(median_voiced_f0(out.audio, 0.1, 0.5) == doctest::Approx(1.2 * base).epsilon(0.05));
  CHECK(out.audio.size() == sp.audio.size());
}

TEST_CASE("doubling duration doubles the length without changing pitch") {
  const auto sp = render_vowel(120.0, 0.5);
  const auto target = apply_edits(measured(sp), {{{EditKind::scale_duration, 0, 2.0}}});
  const auto out = resynthesize_prosody(sp.audio, sp.alignment, target);
  CHECK(std::abs(static_cast<double>(out.audio.size()) - 2.0 * static_cast<double>(sp.audio.size())) <= 320.0);
  CHECK(out.alignment.end_s() == doctest::Approx(1.0).epsilon(0.02));
  CHECK(median_voiced_f0(out.audio, 0.1, 0.9) == doctest::Approx(120.0).epsilon(0.05));
}

TEST_CASE("energy edits reach their targets") {
  const auto sp = render_speech(make_sentence(5));
  const auto base = measured(sp);
  EditScript script;
  for (std::size_t k = 1; k + 1 < base.size(); ++k)
    script.ops.push_back({EditKind::scale_energy, k, k % 2 ? 1.3 : 0.7});
  const auto target = apply_edits(base, script);
  const auto out = resynthesize_prosody(sp.audio, sp.alignment, target);
  const auto got = average_per_phone(track_pitch(out.audio), out.alignment);
  std::size_t ok = 0;
  for (std::size_t k = 1; k + 1 < base.size(); ++k)
    ok += std::abs(got.phones[k].energy / target.phones[k].energy - 1.0) <= 0.1;
  CHECK(static_cast<double>(ok) >= 0.9 * static_cast<double>(base.size() - 2));
}

TEST_CASE("loud targets are soft clipped into range") {
  const auto sp = render_vowel(150.0, 0.4, 16000, 0.3);
  const auto target = apply_edits(measured(sp), {{{EditKind::scale_energy, 0, 8.0}}});
  const auto out = resynthesize_prosody(sp.audio, sp.alignment, target);
  CHECK(out.soft_clipped > 0);
  for (double v : out.audio.samples) CHECK(std::abs(v) <= 1.0);
}

TEST_CASE("output alignment tracks target durations") {
  const auto phones = make_sentence(6);
  const auto sp = render_speech(phones);
  auto target = measured(sp);
  for (std::size_t k = 0; k < target.size(); ++k) target.phones[k].duration_s *= k % 3 ? 1.25 : 0.8;
  const auto out = resynthesize_prosody(sp.audio, sp.alignment, target);
  REQUIRE(out.alignment.size() == target.size());
  for (std::size_t k = 0; k < target.size(); ++k)
    CHECK(std::abs(out.alignment[k].duration_s() - target.phones[k].duration_s) <= 1.0 / 16000 + 1e-9);
}

TEST_CASE("plan and resynthesis errors") {
  const auto sp = render_vowel(150.0, 0.4);
  const auto target = measured(sp);
  CHECK(code_of([&] { plan_synthesis(sp.audio, sp.alignment, normalize(target)); }) == ErrorCode::NormalizedTrack);
  auto renamed = target;
  renamed.phones[0].label = "zz";
  CHECK(code_of([&] { plan_synthesis(sp.audio, sp.alignment, renamed); }) == ErrorCode::PhoneSequenceMismatch);

  const auto plan = plan_synthesis(sp.audio, sp.alignment, target);
  CHECK(plan.phones.size() == target.size());
  CHECK(plan.phones[0].duration_ratio == doctest::Approx(1.0));
  CHECK(plan.phones[0].energy_gain == doctest::Approx(1.0));
  const auto marks = find_pitch_marks(sp.audio, track_pitch(sp.audio));
  auto other = sp.audio;
  other.samples.pop_back();
  CHECK(code_of([&] { resynthesize(other, marks, plan); }) == ErrorCode::PlanMismatch);
  CHECK(code_of([&] { resynthesize(sp.audio, PitchMarks{}, plan); }) == ErrorCode::PlanMismatch);
  auto broken = plan;
  broken.phones[0].src_end = broken.phones[0].src_begin;
  CHECK(code_of([&] { resynthesize(sp.audio, marks, broken); }) == ErrorCode::PlanMismatch);
}
