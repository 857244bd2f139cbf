#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prosodykit/json_io.hpp"

namespace prosodykit::tools {

struct Analysis {
  PitchSpec pitch;
  MelSpec mel;
  FrameSpec frames;
};

struct ExtractArgs {
  std::string audio, align, out;
  std::optional<std::string> track_out;
  bool normalize = false;
};

struct CloneArgs {
  std::string ref_prosody, target_audio, target_align, out;
};

struct EditArgs {
  std::string prosody, script, out;
};

struct SpliceArgs {
  std::string context, donor, out;
  long long start_phone = 0;
  long long end_phone = 0;
};

struct ResynthArgs {
  std::string base_audio, base_align, prosody, out;
  std::optional<std::string> plan_out;
};

struct EvalArgs {
  std::string manifest, out;
};

struct PitchCurvesArgs {
  std::vector<std::string> audio;
  std::vector<std::string> names;
  std::string out;
  std::optional<std::string> svg;
};

// Each command writes its outputs to disk and returns the stdout summary.
// Library errors propagate as prosodykit::Error.
Json cmd_extract(const ExtractArgs& a, const Analysis& an);
Json cmd_clone(const CloneArgs& a, const Analysis& an);
Json cmd_edit(const EditArgs& a);
Json cmd_splice(const SpliceArgs& a);
Json cmd_resynth(const ResynthArgs& a, const Analysis& an);
// Sets `all_failed` when the manifest has rows and none evaluated.
Json cmd_eval(const EvalArgs& a, const Analysis& an, bool& all_failed);
Json cmd_pitch_curves(const PitchCurvesArgs& a, const Analysis& an);

}  // namespace prosodykit::tools
