#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "prosodykit/alignment.hpp"
#include "prosodykit/audio.hpp"
#include "prosodykit/dsp.hpp"
#include "prosodykit/json_io.hpp"
#include "prosodykit/prosody.hpp"
#include "prosodykit/resynth.hpp"

namespace httplib {
class Server;
}

namespace prosodykit::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 7878;
  std::optional<std::filesystem::path> data_dir;
  std::string allow_origin;  // empty: no CORS headers
  std::size_t max_upload = 64ull << 20;
  std::size_t threads = 8;
  PitchSpec pitch;
  MelSpec mel;
  FrameSpec frames;
};

// Immutable inputs of a session, shared with resynthesis jobs.
struct SessionBase {
  std::vector<std::uint8_t> wav_bytes;  // as uploaded
  AudioBuffer audio;
  PhoneAlignment alignment;
  FrameTrack track;
  PitchMarks marks;
};

struct Session {
  std::string id;
  std::shared_ptr<const SessionBase> base;
  ProsodyTrack prosody;
  Json provenance = Json::array();
  std::uint64_t revision = 1;
  // Output for `cached_revision`; cleared by every mutation.
  std::shared_ptr<const AudioBuffer> output;
  std::uint64_t cached_revision = 0;
  bool ever_resynthesized = false;

  mutable std::mutex mu;
};

class SessionStore {
 public:
  SessionStore(const ServiceConfig& config);

  std::shared_ptr<Session> create(std::vector<std::uint8_t> wav_bytes, std::string_view alignment_text);
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<std::string> ids() const;

  // Writes the session directory; the caller holds session.mu.
  void persist(const Session& session) const;
  void append_provenance_log(const Session& session, const Json& entry) const;
  // Loads every session directory under data_dir. Returns the count.
  std::size_t restore();

 private:
  std::string new_id();

  const ServiceConfig& config_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds config.port (0: any free port) and returns the bound port, or -1.
  int bind();
  // Blocks until stop().
  bool serve();
  void stop();

  SessionStore& store() noexcept { return store_; }

 private:
  void routes();

  ServiceConfig config_;
  SessionStore store_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace prosodykit::service
