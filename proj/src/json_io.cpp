#include "prosodykit/json_io.hpp"

#include <fstream>
#include <iterator>

#include "prosodykit/error.hpp"

namespace prosodykit {
namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "' has the wrong type");
  }
}

std::optional<double> optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<double>(j, key);
}

}  // namespace

Json to_json(const FrameTrack& track) {
  return Json{{"hop_ms", track.hop_ms}, {"f0_hz", track.f0_hz}, {"energy", track.energy}};
}

FrameTrack frame_track_from_json(const Json& j) {
  FrameTrack t;
  t.hop_ms = field<double>(j, "hop_ms");
  t.f0_hz = field<std::vector<double>>(j, "f0_hz");
  t.energy = field<std::vector<double>>(j, "energy");
  if (t.f0_hz.size() != t.energy.size()) throw Error(ErrorCode::ParseError, "f0_hz and energy lengths differ");
  if (!(t.hop_ms > 0.0)) throw Error(ErrorCode::ParseError, "hop_ms must be positive");
  return t;
}

Json to_json(const ProsodyTrack& track) {
  Json phones = Json::array();
  for (const auto& p : track.phones) {
    phones.push_back({{"label", p.label},
                      {"duration_s", p.duration_s},
                      {"f0", p.f0},
                      {"energy", p.energy},
                      {"voiced_fraction", p.voiced_fraction}});
  }
  Json j;
  j["normalized"] = track.normalized;
  j["f0_ref_mean"] = track.f0_ref_mean ? Json(*track.f0_ref_mean) : Json(nullptr);
  j["energy_ref_mean"] = track.energy_ref_mean ? Json(*track.energy_ref_mean) : Json(nullptr);
  j["phones"] = std::move(phones);
  return j;
}

ProsodyTrack prosody_from_json(const Json& j) {
  ProsodyTrack t;
  t.normalized = field<bool>(j, "normalized");
  t.f0_ref_mean = optional_number(j, "f0_ref_mean");
  t.energy_ref_mean = optional_number(j, "energy_ref_mean");
  const auto phones = field<Json>(j, "phones");
  if (!phones.is_array()) throw Error(ErrorCode::ParseError, "'phones' must be an array");
  for (const auto& p : phones) {
    t.phones.push_back({field<std::string>(p, "label"), field<double>(p, "duration_s"), field<double>(p, "f0"),
                        field<double>(p, "energy"), field<double>(p, "voiced_fraction")});
  }
  try {
    t.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return t;
}

std::string_view edit_kind_name(EditKind kind) {
  switch (kind) {
    case EditKind::set_f0: return "set_f0";
    case EditKind::set_energy: return "set_energy";
    case EditKind::set_duration: return "set_duration";
    case EditKind::scale_f0: return "scale_f0";
    case EditKind::scale_energy: return "scale_energy";
    case EditKind::scale_duration: return "scale_duration";
  }
  return "";
}

Json to_json(const EditScript& script) {
  Json ops = Json::array();
  for (const auto& op : script.ops)
    ops.push_back({{"op", edit_kind_name(op.kind)}, {"phone", op.phone}, {"value", op.value}});
  return Json{{"ops", std::move(ops)}};
}

EditScript edit_script_from_json(const Json& j) {
  EditScript script;
  const auto ops = field<Json>(j, "ops");
  if (!ops.is_array()) throw Error(ErrorCode::ParseError, "'ops' must be an array");
  for (const auto& o : ops) {
    const auto name = field<std::string>(o, "op");
    EditOp op;
    bool known = false;
    for (auto kind : {EditKind::set_f0, EditKind::set_energy, EditKind::set_duration, EditKind::scale_f0,
                      EditKind::scale_energy, EditKind::scale_duration}) {
      if (name == edit_kind_name(kind)) {
        op.kind = kind;
        known = true;
      }
    }
    if (!known) throw Error(ErrorCode::ParseError, "unknown edit op '" + name + "'");
    const auto phone = field<long long>(o, "phone");
    if (phone < 0) throw Error(ErrorCode::IndexOutOfRange, "negative phone index");
    op.phone = static_cast<std::size_t>(phone);
    op.value = field<double>(o, "value");
    script.ops.push_back(op);
  }
  return script;
}

Json to_json(const SynthesisPlan& plan) {
  Json phones = Json::array();
  for (const auto& p : plan.phones)
    phones.push_back({{"duration_ratio", p.duration_ratio}, {"f0_target_hz", p.f0_target_hz}, {"energy_gain", p.energy_gain}});
  return Json{{"phones", std::move(phones)}};
}

Json to_json(const MetricReport& r) {
  return Json{{"msd", r.msd ? Json(*r.msd) : Json(nullptr)},
              {"ffe", r.ffe},
              {"n_frames_ref", r.n_frames_ref},
              {"n_frames_test", r.n_frames_test},
              {"n_evaluated", r.n_evaluated},
              {"n_voicing_errors", r.n_voicing_errors},
              {"n_f0_deviation_errors", r.n_f0_deviation_errors}};
}

Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

Json load_json(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_json_text(text);
}

void save_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace prosodykit
