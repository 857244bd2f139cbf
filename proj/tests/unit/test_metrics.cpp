#include <cmath>
#include <random>

#include "doctest.h"
#include "prosodykit/metrics.hpp"
#include "synth_speech.hpp"
#include "test_util.hpp"

using namespace prosodykit;
using namespace prosodykit::testing;

namespace {

FrameTrack constant_track(std::size_t n, double f0) {
  return FrameTrack{std::vector<double>(n, f0), std::vector<double>(n, 0.1), 10.0};
}

}  // namespace

TEST_CASE("msd identities on synthetic utterances") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto a = render_speech(make_sentence(s)).audio;
    const auto b = render_speech(perturb_prosody(make_sentence(s), s)).audio;
    CHECK(msd(a, a) == 0.0);
    const double ab = msd(a, b), ba = msd(b, a);
    CHECK(ab > 0.0);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    const auto r = ffe(a, a);
    CHECK(r.ffe == 0.0);
    CHECK(r.n_evaluated == r.n_frames_ref);
  }
}

TEST_CASE("msd from features against a hand computation") {
  Matrix a(3, 1), b(2, 1);
  a(0, 0) = 0.0;
  a(1, 0) = 1.0;
  a(2, 0) = 2.0;
  b(0, 0) = 0.0;
  b(1, 0) = 2.0;
  // path (0,0) (1,1) (2,1) or (0,0) (1,0) (2,1): cost 1 over 3 steps
  CHECK(msd_from_features(a, b) == doctest::Approx(1.0 / 3.0));
  CHECK(code_of([&] { msd_from_features(Matrix(0, 1), b); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { msd_from_features(Matrix(2, 2), b); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("ffe deviation boundary sits at 20%") {
  const auto ref = constant_track(100, 200.0);
  CHECK(ffe_from_tracks(ref, constant_track(100, 200.0 * 1.199)).ffe == 0.0);
  CHECK(ffe_from_tracks(ref, constant_track(100, 200.0 * 0.801)).ffe == 0.0);
  CHECK(ffe_from_tracks(ref, constant_track(100, 200.0 * 1.201)).ffe == 1.0);
  CHECK(ffe_from_tracks(ref, constant_track(100, 200.0 * 0.799)).ffe == 1.0);
  CHECK_FALSE(is_pitch_error(100.0, 119.9));
  CHECK(is_pitch_error(100.0, 120.1));
  CHECK(is_pitch_error(100.0, 0.0));
  CHECK(is_pitch_error(0.0, 100.0));
  CHECK_FALSE(is_pitch_error(0.0, 0.0));
}

TEST_CASE("ffe counts errors by kind over the shorter track") {
  FrameTrack ref = constant_track(10, 100.0), test = constant_track(8, 100.0);
  ref.f0_hz[0] = 0.0;        // voicing error
  test.f0_hz[1] = 0.0;       // voicing error
  test.f0_hz[2] = 150.0;     // deviation error
  test.f0_hz[3] = 110.0;     // fine
  const auto r = ffe_from_tracks(ref, test);
  CHECK(r.n_frames_ref == 10);
  CHECK(r.n_frames_test == 8);
  CHECK(r.n_evaluated == 8);
  CHECK(r.n_voicing_errors == 2);
  CHECK(r.n_f0_deviation_errors == 1);
  CHECK(r.ffe == doctest::Approx(3.0 / 8.0));
  CHECK(ffe_from_tracks(FrameTrack{}, test).ffe == 0.0);
}

TEST_CASE("a 25% pitch shift is all deviation errors") {
  const AudioBuffer a{sine(200.0, 0.4, 16000, 16000), 16000, 0};
  const AudioBuffer b{sine(250.0, 0.4, 16000, 16000), 16000, 0};
  const auto r = ffe(a, b);
  CHECK(r.ffe >= 0.95);
  CHECK(r.n_f0_deviation_errors >= r.n_voicing_errors);
}

TEST_CASE("sample rate mismatch") {
  const AudioBuffer a{std::vector<double>(16000, 0.0), 16000, 0};
  const AudioBuffer b{std::vector<double>(22050, 0.0), 22050, 0};
  CHECK(code_of([&] { msd(a, b); }) == ErrorCode::SampleRateMismatch);
  CHECK(code_of([&] { ffe(a, b); }) == ErrorCode::SampleRateMismatch);
}

TEST_CASE("pitch curve export") {
  const AudioBuffer a{sine(150.0, 0.4, 8000, 16000), 16000, 0};
  const AudioBuffer b{sine(180.0, 0.4, 12000, 16000), 16000, 0};
  TempDir tmp;
  compare_pitch_curves({{"a", a}, {"b", b}}, {}, tmp / "c.csv", tmp / "c.svg");
  const auto csv = read_file(tmp / "c.csv");
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + 50 + 75);
  CHECK(csv.rfind("name,time_s,f0_hz\n", 0) == 0);
  const auto svg = read_file(tmp / "c.svg");
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(code_of([&] { compare_pitch_curves({}, {}, tmp / "x.csv"); }) == ErrorCode::EmptyInput);
}

TEST_CASE("manifest parsing and evaluation") {
  const auto rows = parse_manifest("ref_path,test_path\n a.wav , b.wav\n\n/abs/c.wav,d.wav\n");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ref == "a.wav");
  CHECK(rows[0].test == "b.wav");
  CHECK(rows[1].ref == "/abs/c.wav");
  CHECK(parse_manifest("").empty());
  CHECK(code_of([] { parse_manifest("only-one-field\n"); }) == ErrorCode::ParseError);

  TempDir tmp;
  const auto a = render_speech(make_sentence(0));
  save_wav(a.audio, tmp / "a.wav");
  save_wav(render_speech(perturb_prosody(make_sentence(0), 3)).audio, tmp / "b.wav");
  const auto results = evaluate_manifest({{"a.wav", "a.wav"}, {"a.wav", "missing.wav"}, {"a.wav", "b.wav"}}, tmp.path());
  REQUIRE(results.size() == 3);
  REQUIRE(results[0].report);
  CHECK(*results[0].report->msd == 0.0);
  CHECK(results[0].report->ffe == 0.0);
  CHECK_FALSE(results[1].report);
  CHECK(results[1].error.find("FileNotFound") != std::string::npos);
  REQUIRE(results[2].report);
  CHECK(*results[2].report->msd > 0.0);

  const auto csv = format_report_csv(results);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 4);
  CHECK(csv.rfind("ref,test,msd,ffe,voicing_errors,f0_errors,frames,error\n", 0) == 0);
  CHECK(format_report_csv({}) == "ref,test,msd,ffe,voicing_errors,f0_errors,frames,error\n");
}
