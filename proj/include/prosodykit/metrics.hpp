#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prosodykit/audio.hpp"
#include "prosodykit/dsp.hpp"
#include "prosodykit/matrix.hpp"

namespace prosodykit {

struct MetricReport {
  std::optional<double> msd;
  double ffe = 0.0;
  std::size_t n_frames_ref = 0;
  std::size_t n_frames_test = 0;
  std::size_t n_evaluated = 0;
  std::size_t n_voicing_errors = 0;
  std::size_t n_f0_deviation_errors = 0;
};

// Average euclidean distance along the minimum-cost DTW path between two
// feature sequences (rows are frames).
double msd_from_features(const Matrix& ref, const Matrix& test);

// Log-mel spectral distortion with DTW. Sequences may differ in length.
double msd(const AudioBuffer& ref, const AudioBuffer& test, const MelSpec& mel = {}, const FrameSpec& frames = {});

// True when the test frame disagrees on voicing, or both are voiced and the
// test F0 deviates from the reference by more than 20% of the reference.
bool is_pitch_error(double ref_f0, double test_f0);

// Frame-synchronous F0 frame error over the first min(n_ref, n_test) frames.
MetricReport ffe_from_tracks(const FrameTrack& ref, const FrameTrack& test);
MetricReport ffe(const AudioBuffer& ref, const AudioBuffer& test, const PitchSpec& pitch = {});

// ffe plus msd in one report.
MetricReport evaluate(const AudioBuffer& ref, const AudioBuffer& test, const MelSpec& mel = {},
                      const FrameSpec& frames = {}, const PitchSpec& pitch = {});

// CSV (name,time_s,f0_hz) with one row per frame per signal, and an SVG line
// plot when svg_out is given.
void compare_pitch_curves(const std::vector<std::pair<std::string, AudioBuffer>>& signals, const PitchSpec& pitch,
                          const std::filesystem::path& csv_out,
                          const std::optional<std::filesystem::path>& svg_out = std::nullopt);

struct ManifestRow {
  std::string ref;
  std::string test;
};

struct EvalRow {
  ManifestRow pair;
  std::optional<MetricReport> report;
  std::string error;
};

// "ref_path,test_path" per line; blank lines and a ref_path header are skipped.
std::vector<ManifestRow> parse_manifest(std::string_view text);

// Evaluates every row (rows fan out across threads); relative paths resolve
// against base_dir. Results keep manifest order.
std::vector<EvalRow> evaluate_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& base_dir,
                                       const MelSpec& mel = {}, const FrameSpec& frames = {},
                                       const PitchSpec& pitch = {});

// Columns: ref,test,msd,ffe,voicing_errors,f0_errors,frames,error
std::string format_report_csv(const std::vector<EvalRow>& rows);

}  // namespace prosodykit
