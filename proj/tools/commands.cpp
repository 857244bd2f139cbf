#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <iterator>

#include "prosodykit/alignment.hpp"
#include "prosodykit/audio.hpp"
#include "prosodykit/error.hpp"
#include "prosodykit/metrics.hpp"
#include "prosodykit/prosody.hpp"
#include "prosodykit/resynth.hpp"
#include "provenance.hpp"

namespace prosodykit::tools {
namespace {

namespace fs = std::filesystem;

Json pitch_params(const PitchSpec& p) {
  return Json{{"f0_floor", p.f0_floor}, {"f0_ceil", p.f0_ceil}, {"voicing_threshold", p.voicing_threshold},
              {"hop_ms", p.hop_ms}};
}

struct ProsodyDoc {
  ProsodyTrack track;
  Json provenance = Json::array();
};

ProsodyDoc load_prosody(const std::string& path) {
  const auto j = load_json(path);
  ProsodyDoc doc{prosody_from_json(j)};
  if (j.contains("provenance") && j["provenance"].is_array()) doc.provenance = j["provenance"];
  return doc;
}

void save_prosody(const ProsodyDoc& doc, const std::string& path) {
  Json j = to_json(doc.track);
  j["provenance"] = doc.provenance;
  save_json(j, path);
}

std::string read_text(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Json ok(std::string_view command, std::string_view out) {
  return Json{{"command", command}, {"status", "ok"}, {"out", out}};
}

ProsodyTrack extract_from(const std::string& audio_path, const std::string& align_path, const PitchSpec& pitch) {
  const auto audio = load_wav(audio_path);
  const auto align = load_alignment(align_path);
  spdlog::debug("{}: {} samples at {} Hz, {} phones", audio_path, audio.size(), audio.sample_rate, align.size());
  return average_per_phone(track_pitch(audio, pitch), align);
}

}  // namespace

Json cmd_extract(const ExtractArgs& a, const Analysis& an) {
  const auto audio = load_wav(a.audio);
  const auto align = load_alignment(a.align);
  const auto track = track_pitch(audio, an.pitch);
  ProsodyDoc doc{average_per_phone(track, align)};
  if (a.normalize) doc.track = normalize(doc.track);
  Json params{{"audio", a.audio}, {"align", a.align}, {"normalize", a.normalize}};
  params.update(pitch_params(an.pitch));
  doc.provenance.push_back(provenance_entry("extract", std::move(params)));
  save_prosody(doc, a.out);
  if (a.track_out) save_json(to_json(track), *a.track_out);
  auto summary = ok("extract", a.out);
  summary["phones"] = doc.track.size();
  summary["frames"] = track.n_frames();
  return summary;
}

Json cmd_clone(const CloneArgs& a, const Analysis& an) {
  const auto ref = load_prosody(a.ref_prosody);
  const auto base = extract_from(a.target_audio, a.target_align, an.pitch);
  ProsodyDoc doc{clone_prosody(ref.track, base), ref.provenance};
  Json params{{"ref_prosody", a.ref_prosody}, {"target_audio", a.target_audio}, {"target_align", a.target_align}};
  params.update(pitch_params(an.pitch));
  doc.provenance.push_back(provenance_entry("clone", std::move(params)));
  save_prosody(doc, a.out);
  auto summary = ok("clone", a.out);
  summary["phones"] = doc.track.size();
  return summary;
}

Json cmd_edit(const EditArgs& a) {
  auto doc = load_prosody(a.prosody);
  const auto script_json = load_json(a.script);
  EditScript script;
  try {
    script = edit_script_from_json(script_json);
  } catch (const Error& e) {
    // well-formed JSON that is not a valid script is an invalid edit
    if (e.code() != ErrorCode::ParseError) throw;
    throw Error(ErrorCode::InvalidValue, std::string("edit script: ") + e.what());
  }
  doc.track = apply_edits(doc.track, script);
  doc.provenance.push_back(provenance_entry("edit", Json{{"script", a.script}, {"ops", to_json(script)["ops"]}}));
  save_prosody(doc, a.out);
  auto summary = ok("edit", a.out);
  summary["ops"] = script.ops.size();
  return summary;
}

Json cmd_splice(const SpliceArgs& a) {
  if (a.start_phone < 0 || a.end_phone < 0) throw Error(ErrorCode::IndexOutOfRange, "phone indices must be >= 0");
  auto doc = load_prosody(a.context);
  const auto donor = load_prosody(a.donor);
  const SpliceRegion region{static_cast<std::size_t>(a.start_phone), static_cast<std::size_t>(a.end_phone)};
  doc.track = splice(doc.track, donor.track, region);
  doc.provenance.push_back(provenance_entry(
      "splice", Json{{"context", a.context}, {"donor", a.donor}, {"start_phone", a.start_phone}, {"end_phone", a.end_phone}}));
  save_prosody(doc, a.out);
  auto summary = ok("splice", a.out);
  summary["phones"] = doc.track.size();
  return summary;
}

Json cmd_resynth(const ResynthArgs& a, const Analysis& an) {
  const auto audio = load_wav(a.base_audio);
  const auto align = load_alignment(a.base_align);
  const auto target = load_prosody(a.prosody).track;
  const auto track = track_pitch(audio, an.pitch);
  const auto plan = plan_synthesis(audio, align, target, track, an.pitch);
  if (a.plan_out) save_json(to_json(plan), *a.plan_out);
  const auto marks = find_pitch_marks(audio, track, an.pitch);
  const auto res = resynthesize(audio, marks, plan);
  if (res.soft_clipped) spdlog::warn("soft clip engaged on {} sample(s)", res.soft_clipped);
  save_wav(res.audio, a.out);
  auto summary = ok("resynth", a.out);
  summary["samples"] = res.audio.size();
  summary["sample_rate"] = res.audio.sample_rate;
  summary["soft_clipped"] = res.soft_clipped;
  return summary;
}

Json cmd_eval(const EvalArgs& a, const Analysis& an, bool& all_failed) {
  const fs::path manifest(a.manifest);
  const auto rows = parse_manifest(read_text(manifest));
  const auto results = evaluate_manifest(rows, manifest.parent_path(), an.mel, an.frames, an.pitch);
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (!r.report) {
      ++failed;
      spdlog::warn("{} vs {}: {}", r.pair.ref, r.pair.test, r.error);
    }
  }
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + a.out + " for writing");
  out << format_report_csv(results);
  if (!out) throw Error(ErrorCode::IoError, "short write to " + a.out);
  all_failed = !results.empty() && failed == results.size();
  auto summary = ok("eval", a.out);
  summary["rows"] = results.size();
  summary["failed"] = failed;
  if (all_failed) summary["status"] = "error";
  return summary;
}

Json cmd_pitch_curves(const PitchCurvesArgs& a, const Analysis& an) {
  if (!a.names.empty() && a.names.size() != a.audio.size())
    throw Error(ErrorCode::InvalidSpec, "--name must be given once per --audio or not at all");
  std::vector<std::pair<std::string, AudioBuffer>> signals;
  for (std::size_t i = 0; i < a.audio.size(); ++i) {
    const auto name = a.names.empty() ? fs::path(a.audio[i]).stem().string() : a.names[i];
    signals.emplace_back(name, load_wav(a.audio[i]));
  }
  std::optional<fs::path> svg;
  if (a.svg) svg = *a.svg;
  compare_pitch_curves(signals, an.pitch, a.out, svg);
  auto summary = ok("pitch-curves", a.out);
  summary["signals"] = signals.size();
  return summary;
}

}  // namespace prosodykit::tools
