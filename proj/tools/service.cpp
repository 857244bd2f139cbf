#include "service.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>

#include "httplib.h"
#include "prosodykit/error.hpp"
#include "prosodykit/metrics.hpp"
#include "provenance.hpp"

namespace prosodykit::service {
namespace {

namespace fs = std::filesystem;
using httplib::Request;
using httplib::Response;

constexpr const char* kJson = "application/json";

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

void send_json(Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(Response& res, int status, std::string_view code, std::string_view message) {
  send_json(res, status, Json{{"error", code}, {"message", message}});
}

// Status for a library error raised while serving a request.
int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::PhoneSequenceMismatch:
    case ErrorCode::SampleRateMismatch: return 409;
    case ErrorCode::InvalidValue:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::NormalizedTrack: return 422;
    default: return 400;
  }
}

std::string error_message(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

std::string etag(std::uint64_t revision) { return "\"" + std::to_string(revision) + "\""; }

// Accepts 3, "3" and W/"3".
std::optional<std::uint64_t> parse_if_match(std::string value) {
  if (value.rfind("W/", 0) == 0) value.erase(0, 2);
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Json alignment_json(const PhoneAlignment& align) {
  Json out = Json::array();
  for (const auto& p : align.phones()) out.push_back({{"label", p.label}, {"start_s", p.start_s}, {"end_s", p.end_s}});
  return out;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

// Write-then-rename so a crash never leaves a half-written file behind.
void write_atomic(const fs::path& path, std::string_view data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Json prosody_document(const Session& s) {
  Json doc = to_json(s.prosody);
  doc["provenance"] = s.provenance;
  return doc;
}

std::shared_ptr<const SessionBase> make_base(std::vector<std::uint8_t> wav_bytes, const PhoneAlignment& align,
                                             const PitchSpec& pitch) {
  auto base = std::make_shared<SessionBase>();
  base->audio = decode_wav(wav_bytes);
  base->wav_bytes = std::move(wav_bytes);
  base->alignment = align;
  base->track = track_pitch(base->audio, pitch);
  base->marks = find_pitch_marks(base->audio, base->track, pitch);
  return base;
}

}  // namespace

SessionStore::SessionStore(const ServiceConfig& config) : config_(config) {}

std::string SessionStore::new_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[17];
  for (;;) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng() ^ ++counter_));
    if (!sessions_.count(buf)) return buf;
  }
}

std::shared_ptr<Session> SessionStore::create(std::vector<std::uint8_t> wav_bytes, std::string_view alignment_text) {
  const auto align = parse_alignment(alignment_text, sniff_alignment_format(alignment_text));
  auto base = make_base(std::move(wav_bytes), align, config_.pitch);
  auto session = std::make_shared<Session>();
  session->prosody = average_per_phone(base->track, base->alignment);
  session->provenance.push_back(tools::provenance_entry(
      "create", {{"phones", session->prosody.size()}, {"sample_rate", base->audio.sample_rate}, {"revision", 1}}));
  session->base = std::move(base);
  {
    std::unique_lock lock(mu_);
    session->id = new_id();
    sessions_.emplace(session->id, session);
  }
  std::lock_guard slock(session->mu);
  persist(*session);
  append_provenance_log(*session, session->provenance.back());
  return session;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> SessionStore::ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void SessionStore::persist(const Session& s) const {
  if (!config_.data_dir) return;
  const fs::path dir = *config_.data_dir / s.id;
  fs::create_directories(dir);
  if (!fs::exists(dir / "audio.wav")) {
    const auto& bytes = s.base->wav_bytes;
    write_atomic(dir / "audio.wav", {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
    write_atomic(dir / "alignment.lab", format_lab(s.base->alignment));
  }
  write_atomic(dir / "prosody.json", prosody_document(s).dump(2) + "\n");
  write_atomic(dir / "revision", std::to_string(s.revision) + "\n");
}

void SessionStore::append_provenance_log(const Session& s, const Json& entry) const {
  if (!config_.data_dir) return;
  std::ofstream out(*config_.data_dir / s.id / "provenance.log", std::ios::app);
  out << entry.dump() << '\n';
}

std::size_t SessionStore::restore() {
  if (!config_.data_dir || !fs::is_directory(*config_.data_dir)) return 0;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(*config_.data_dir))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  std::size_t restored = 0;
  for (const auto& dir : dirs) {
    try {
      const auto align = parse_lab(read_text(dir / "alignment.lab"));
      auto session = std::make_shared<Session>();
      session->base = make_base(read_bytes(dir / "audio.wav"), align, config_.pitch);
      const auto doc = parse_json_text(read_text(dir / "prosody.json"));
      session->prosody = prosody_from_json(doc);
      if (doc.contains("provenance") && doc["provenance"].is_array()) session->provenance = doc["provenance"];
      session->revision = std::stoull(read_text(dir / "revision"));
      session->id = dir.filename().string();
      std::unique_lock lock(mu_);
      sessions_[session->id] = std::move(session);
      ++restored;
    } catch (const std::exception& e) {
      spdlog::warn("skipping session directory {}: {}", dir.string(), e.what());
    }
  }
  return restored;
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)), store_(config_), server_(std::make_unique<httplib::Server>()) {
  if (config_.data_dir) {
    fs::create_directories(*config_.data_dir);
    const auto n = store_.restore();
    if (n) spdlog::info("restored {} session(s) from {}", n, config_.data_dir->string());
  }
  const std::size_t threads = std::max<std::size_t>(1, config_.threads);
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  server_->set_payload_max_length(config_.max_upload);
  routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (config_.port == 0) return server_->bind_to_any_port(config_.host);
  return server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool Service::serve() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::routes() {
  auto& srv = *server_;
  const std::string origin = config_.allow_origin;

  srv.set_post_routing_handler([origin](const Request&, Response& res) {
    if (origin.empty()) return;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Expose-Headers", "ETag, X-Revision");
    res.set_header("Vary", "Origin");
  });
  srv.Options(R"(/.*)", [origin](const Request&, Response& res) {
    res.status = 204;
    if (origin.empty()) return;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, If-Match");
    res.set_header("Access-Control-Max-Age", "600");
  });
  srv.set_error_handler([](const Request&, Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 413) send_error(res, 413, "PayloadTooLarge", "request body exceeds the upload limit");
    else if (res.status == 404) send_error(res, 404, "NotFound", "no such route");
  });
  srv.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      spdlog::error("unhandled: {}", e.what());
      send_error(res, 500, "Internal", e.what());
    }
  });
  srv.set_logger([](const Request& req, const Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });

  // Runs `fn(session)` or answers 404; library errors become JSON errors.
  const auto with_session = [this](const Request& req, Response& res, auto&& fn) {
    const auto session = store_.find(req.path_params.at("id"));
    if (!session) return send_error(res, 404, "NotFound", "unknown session " + req.path_params.at("id"));
    try {
      fn(session);
    } catch (const HttpError& e) {
      send_error(res, e.status, e.code, e.message);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), error_message(e));
    }
  };

  // Current output of a session: its resynthesis at the current revision
  // (rendered outside the session lock), or base audio if never resynthesized
  // and `base_if_fresh` is set.
  const auto output_of = [this](const std::shared_ptr<Session>& s, bool base_if_fresh) {
    std::shared_ptr<const SessionBase> base;
    ProsodyTrack prosody;
    std::uint64_t rev;
    {
      std::lock_guard lock(s->mu);
      if (base_if_fresh && !s->ever_resynthesized)
        return std::make_pair(std::shared_ptr<const AudioBuffer>(s->base, &s->base->audio), s->revision);
      if (s->output && s->cached_revision == s->revision) return std::make_pair(s->output, s->revision);
      base = s->base;
      prosody = s->prosody;
      rev = s->revision;
    }
    const auto plan = plan_synthesis(base->audio, base->alignment, prosody, base->track, config_.pitch);
    auto audio = std::make_shared<const AudioBuffer>(resynthesize(base->audio, base->marks, plan).audio);
    std::lock_guard lock(s->mu);
    s->ever_resynthesized = true;
    if (s->revision == rev) {
      s->output = audio;
      s->cached_revision = rev;
    }
    return std::make_pair(std::shared_ptr<const AudioBuffer>(audio), rev);
  };

  // Commits a new prosody track; the caller holds s.mu.
  const auto commit = [this](Session& s, ProsodyTrack next, std::string_view op, Json params) {
    s.prosody = std::move(next);
    ++s.revision;
    s.output.reset();
    s.cached_revision = 0;
    params["revision"] = s.revision;
    s.provenance.push_back(tools::provenance_entry(op, std::move(params)));
    store_.persist(s);
    store_.append_provenance_log(s, s.provenance.back());
  };

  const auto check_revision = [](const Request& req, const Session& s, bool required) {
    if (!req.has_header("If-Match")) {
      if (required) throw HttpError{428, "PreconditionRequired", "If-Match header with the current revision is required"};
      return;
    }
    const auto rev = parse_if_match(req.get_header_value("If-Match"));
    if (!rev) throw HttpError{400, "ParseError", "If-Match must be a revision number"};
    if (*rev != s.revision)
      throw HttpError{409, "RevisionConflict",
                      "If-Match " + std::to_string(*rev) + " but current revision is " + std::to_string(s.revision)};
  };

  const auto prosody_reply = [](Response& res, const Session& s, int status) {
    res.set_header("ETag", etag(s.revision));
    send_json(res, status, Json{{"prosody", to_json(s.prosody)}, {"revision", s.revision}});
  };

  srv.Post("/sessions", [this](const Request& req, Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("audio") || !req.has_file("alignment"))
      return send_error(res, 400, "ParseError", "expected multipart fields 'audio' and 'alignment'");
    const auto audio = req.get_file_value("audio").content;
    try {
      const auto s = store_.create({audio.begin(), audio.end()}, req.get_file_value("alignment").content);
      std::lock_guard lock(s->mu);
      res.set_header("ETag", etag(s->revision));
      res.set_header("Location", "/sessions/" + s->id);
      send_json(res, 201, Json{{"id", s->id}, {"prosody", to_json(s->prosody)}, {"revision", s->revision}});
      spdlog::info("created session {} ({} phones)", s->id, s->prosody.size());
    } catch (const Error& e) {
      send_error(res, 400, to_string(e.code()), error_message(e));
    }
  });

  srv.Get("/sessions", [this](const Request&, Response& res) { send_json(res, 200, Json{{"sessions", store_.ids()}}); });

  srv.Get("/sessions/:id", [with_session](const Request& req, Response& res) {
    with_session(req, res, [&](const std::shared_ptr<Session>& s) {
      std::lock_guard lock(s->mu);
      res.set_header("ETag", etag(s->revision));
      send_json(res, 200,
                Json{{"id", s->id},
                     {"revision", s->revision},
                     {"sample_rate", s->base->audio.sample_rate},
                     {"n_samples", s->base->audio.size()},
                     {"alignment", alignment_json(s->base->alignment)},
                     {"prosody", to_json(s->prosody)},
                     {"provenance", s->provenance}});
    });
  });

  srv.Get("/sessions/:id/prosody", [with_session, prosody_reply](const Request& req, Response& res) {
    with_session(req, res, [&](const std::shared_ptr<Session>& s) {
      std::lock_guard lock(s->mu);
      prosody_reply(res, *s, 200);
    });
  });

  srv.Patch("/sessions/:id/prosody",
            [with_session, check_revision, commit, prosody_reply](const Request& req, Response& res) {
              with_session(req, res, [&](const std::shared_ptr<Session>& s) {
                std::lock_guard lock(s->mu);
                check_revision(req, *s, true);
                const auto body = parse_json_text(req.body);
                EditScript script;
                try {
                  script = edit_script_from_json(body);
                } catch (const Error& e) {
                  throw HttpError{422, std::string(to_string(e.code())), error_message(e)};
                }
                auto next = apply_edits(s->prosody, script);
                commit(*s, std::move(next), "edit", to_json(script));
                prosody_reply(res, *s, 200);
              });
            });

  srv.Post("/sessions/:id/splice", [this, with_session, check_revision, commit, prosody_reply](const Request& req,
                                                                                                Response& res) {
    with_session(req, res, [&](const std::shared_ptr<Session>& s) {
      const auto body = parse_json_text(req.body);
      if (!body.is_object() || !body.contains("donor") || !body["donor"].is_string() || !body.contains("start_phone") ||
          !body.contains("end_phone") || !body["start_phone"].is_number_integer() ||
          !body["end_phone"].is_number_integer())
        throw HttpError{422, "InvalidValue", "body must be {\"donor\": id, \"start_phone\": int, \"end_phone\": int}"};
      const std::string donor_id = body["donor"].get<std::string>();
      const auto start = body["start_phone"].get<long long>(), end = body["end_phone"].get<long long>();
      if (start < 0 || end < 0) throw HttpError{422, "IndexOutOfRange", "phone indices must be non-negative"};
      const auto donor = store_.find(donor_id);
      if (!donor) throw HttpError{404, "NotFound", "unknown donor session " + donor_id};
      // Snapshot the donor first; locks are never held two at a time.
      ProsodyTrack donor_prosody;
      std::uint64_t donor_rev = 0;
      if (donor != s) {
        std::lock_guard lock(donor->mu);
        donor_prosody = donor->prosody;
        donor_rev = donor->revision;
      }
      std::lock_guard lock(s->mu);
      check_revision(req, *s, false);
      if (donor == s) {
        donor_prosody = s->prosody;
        donor_rev = s->revision;
      }
      const SpliceRegion region{static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
      auto next = splice(s->prosody, donor_prosody, region);
      commit(*s, std::move(next), "splice",
             Json{{"donor", donor_id}, {"donor_revision", donor_rev}, {"start_phone", start}, {"end_phone", end}});
      prosody_reply(res, *s, 200);
    });
  });

  srv.Post("/sessions/:id/resynthesize", [with_session, output_of](const Request& req, Response& res) {
    with_session(req, res, [&](const std::shared_ptr<Session>& s) {
      const auto [audio, rev] = output_of(s, false);
      const auto bytes = encode_wav(*audio);
      res.set_header("X-Revision", std::to_string(rev));
      res.set_header("ETag", etag(rev));
      res.set_content(std::string(bytes.begin(), bytes.end()), "audio/wav");
    });
  });

  srv.Get("/sessions/:id/audio", [with_session](const Request& req, Response& res) {
    with_session(req, res, [&](const std::shared_ptr<Session>& s) {
      const auto& bytes = s->base->wav_bytes;
      res.set_content(std::string(bytes.begin(), bytes.end()), "audio/wav");
    });
  });

  srv.Get("/sessions/:id/metrics", [this, with_session, output_of](const Request& req, Response& res) {
    with_session(req, res, [&](const std::shared_ptr<Session>& s) {
      if (!req.has_param("against")) throw HttpError{400, "ParseError", "query parameter 'against' is required"};
      const auto other = store_.find(req.get_param_value("against"));
      if (!other) throw HttpError{404, "NotFound", "unknown session " + req.get_param_value("against")};
      const auto a = output_of(s, true).first;
      const auto b = other == s ? a : output_of(other, true).first;
      const auto report = evaluate(*a, *b, config_.mel, config_.frames, config_.pitch);
      send_json(res, 200, to_json(report));
    });
  });
}

}  // namespace prosodykit::service
