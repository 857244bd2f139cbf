#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "prosodykit/dsp.hpp"
#include "prosodykit/metrics.hpp"
#include "prosodykit/prosody.hpp"
#include "prosodykit/resynth.hpp"

namespace prosodykit {

using Json = nlohmann::ordered_json;

// Field names below are a fixed contract shared with the CLI and the editor.
// Parsers throw ParseError on schema violations and ignore unknown keys
// (notably "provenance").

Json to_json(const FrameTrack& track);
FrameTrack frame_track_from_json(const Json& j);

Json to_json(const ProsodyTrack& track);
ProsodyTrack prosody_from_json(const Json& j);

std::string_view edit_kind_name(EditKind kind);
Json to_json(const EditScript& script);
EditScript edit_script_from_json(const Json& j);

Json to_json(const SynthesisPlan& plan);
Json to_json(const MetricReport& report);

Json parse_json_text(std::string_view text);
Json load_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void save_json(const Json& j, const std::filesystem::path& path);

}  // namespace prosodykit
