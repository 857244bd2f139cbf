#include <signal.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "commands.hpp"
#include "prosodykit/error.hpp"
#include "service.hpp"

namespace {

using namespace prosodykit;
using namespace prosodykit::tools;

enum Exit { kOk = 0, kUnexpected = 1, kIo = 2, kMismatch = 3, kInvalidEdit = 4, kResynth = 5 };

int exit_code(ErrorCode code, std::string_view command) {
  if (command == "resynth" && (code == ErrorCode::PhoneSequenceMismatch || code == ErrorCode::NormalizedTrack ||
                               code == ErrorCode::PlanMismatch))
    return kResynth;
  switch (code) {
    case ErrorCode::PhoneSequenceMismatch: return kMismatch;
    case ErrorCode::InvalidValue:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::AlreadyNormalized:
    case ErrorCode::NotNormalized:
    case ErrorCode::NonpositiveMean:
    case ErrorCode::AllUnvoiced: return kInvalidEdit;
    case ErrorCode::NormalizedTrack:
    case ErrorCode::PlanMismatch: return kResynth;
    default: return kIo;
  }
}

void print_summary(const Json& j) { std::cout << j.dump() << std::endl; }

int serve(service::ServiceConfig config) {
  // Block termination signals in every thread; a dedicated waiter stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Service svc(std::move(config));
  const int port = svc.bind();
  if (port < 0) {
    spdlog::error("cannot bind the requested port");
    print_summary(Json{{"command", "serve"}, {"status", "error"}, {"code", "IoError"}});
    return kIo;
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    svc.stop();
  });
  waiter.detach();
  print_summary(Json{{"command", "serve"}, {"status", "listening"}, {"port", port}});
  spdlog::info("listening on port {}", port);
  return svc.serve() ? kOk : kIo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phone-level prosody extraction, cloning, editing, resynthesis and evaluation."};
  app.name("prosodykit");
  app.set_config("--config", "", "Read option defaults from a key=value file");
  app.fallthrough();
  app.require_subcommand(1);

  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "Diagnostics on stderr")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
      ->capture_default_str();
  Analysis an;
  app.add_option("--f0-floor", an.pitch.f0_floor, "Lowest F0 the tracker reports (Hz)")->capture_default_str();
  app.add_option("--f0-ceil", an.pitch.f0_ceil, "Highest F0 the tracker reports (Hz)")->capture_default_str();
  app.add_option("--voicing-threshold", an.pitch.voicing_threshold, "Tracker aperiodicity threshold")
      ->capture_default_str();
  double hop_ms = 10.0;
  app.add_option("--hop-ms", hop_ms, "Analysis hop for pitch, energy and mel frames")->capture_default_str();
  app.add_option("--frame-ms", an.frames.frame_length_ms, "Mel analysis frame length")->capture_default_str();
  app.add_option("--energy-frame-ms", an.pitch.energy_frame_ms, "Energy analysis frame length")->capture_default_str();
  app.add_option("--n-mels", an.mel.n_mels, "Mel bands")->capture_default_str();
  app.add_option("--n-fft", an.mel.n_fft, "FFT size (0: next power of two >= frame)")->capture_default_str();
  app.add_option("--fmin", an.mel.fmin, "Lowest mel filter edge (Hz)")->capture_default_str();
  app.add_option("--fmax", an.mel.fmax, "Highest mel filter edge (Hz, 0: Nyquist)")->capture_default_str();

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Per-phone F0, energy and duration from audio + alignment");
  extract->add_option("--audio", ex.audio, "WAV file")->required();
  extract->add_option("--align", ex.align, "lab or TextGrid alignment")->required();
  extract->add_option("--out", ex.out, "Prosody JSON output")->required();
  extract->add_option("--track-out", ex.track_out, "Also write the frame-level track as JSON");
  extract->add_flag("--normalize", ex.normalize, "Write ratios to the utterance means");

  CloneArgs cl;
  auto* clone = app.add_subcommand("clone", "Transfer reference prosody onto a target rendition");
  clone->add_option("--ref-prosody", cl.ref_prosody, "Reference prosody JSON")->required();
  clone->add_option("--target-audio", cl.target_audio, "Target WAV")->required();
  clone->add_option("--target-align", cl.target_align, "Target alignment")->required();
  clone->add_option("--out", cl.out, "Prosody JSON output")->required();

  EditArgs ed;
  auto* edit = app.add_subcommand("edit", "Apply an edit script to a prosody JSON");
  edit->add_option("--prosody", ed.prosody, "Prosody JSON")->required();
  edit->add_option("--script", ed.script, "Edit script JSON")->required();
  edit->add_option("--out", ed.out, "Prosody JSON output")->required();

  SpliceArgs sp;
  auto* splice_cmd = app.add_subcommand("splice", "Take a phone range from a donor rendition");
  splice_cmd->add_option("--context", sp.context, "Context prosody JSON")->required();
  splice_cmd->add_option("--donor", sp.donor, "Donor prosody JSON")->required();
  splice_cmd->add_option("--start-phone", sp.start_phone, "First phone of the region")->required();
  splice_cmd->add_option("--end-phone", sp.end_phone, "Last phone of the region (inclusive)")->required();
  splice_cmd->add_option("--out", sp.out, "Prosody JSON output")->required();

  ResynthArgs rs;
  auto* resynth = app.add_subcommand("resynth", "Render prosody onto a base recording");
  resynth->add_option("--base-audio", rs.base_audio, "Base WAV")->required();
  resynth->add_option("--base-align", rs.base_align, "Base alignment")->required();
  resynth->add_option("--prosody", rs.prosody, "Target prosody JSON (absolute values)")->required();
  resynth->add_option("--out", rs.out, "WAV output")->required();
  resynth->add_option("--plan-out", rs.plan_out, "Also write the synthesis plan as JSON");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "MSD and FFE for every pair in a manifest");
  eval->add_option("--manifest", ev.manifest, "CSV of ref_path,test_path")->required();
  eval->add_option("--out", ev.out, "Report CSV")->required();

  PitchCurvesArgs pc;
  auto* curves = app.add_subcommand("pitch-curves", "Tracked F0 of several recordings as CSV (and SVG)");
  curves->add_option("--audio", pc.audio, "WAV file; repeat for each signal")->required();
  curves->add_option("--name", pc.names, "Curve name per --audio (default: file stem)");
  curves->add_option("--out", pc.out, "CSV output")->required();
  curves->add_option("--svg", pc.svg, "SVG plot output");

  service::ServiceConfig sc;
  std::string data_dir;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP session service for the editor");
  serve_cmd->add_option("--port", sc.port, "TCP port (0: any free port)")->capture_default_str();
  serve_cmd->add_option("--host", sc.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "Persist sessions under this directory");
  serve_cmd->add_option("--allow-origin", sc.allow_origin, "CORS origin of the editor UI");
  serve_cmd->add_option("--max-upload", sc.max_upload, "Upload size limit, e.g. 64MiB")
      ->transform(CLI::AsSizeValue(false))
      ->capture_default_str();
  serve_cmd->add_option("--threads", sc.threads, "Request worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kIo;
  }

  auto logger = spdlog::stderr_logger_mt("prosodykit");
  logger->set_pattern("%l: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  an.pitch.hop_ms = hop_ms;
  an.frames.hop_ms = hop_ms;
  std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*extract) print_summary(cmd_extract(ex, an));
    else if (*clone) print_summary(cmd_clone(cl, an));
    else if (*edit) print_summary(cmd_edit(ed));
    else if (*splice_cmd) print_summary(cmd_splice(sp));
    else if (*resynth) print_summary(cmd_resynth(rs, an));
    else if (*eval) {
      bool all_failed = false;
      print_summary(cmd_eval(ev, an, all_failed));
      return all_failed ? kIo : kOk;
    } else if (*curves) print_summary(cmd_pitch_curves(pc, an));
    else if (*serve_cmd) {
      sc.pitch = an.pitch;
      sc.mel = an.mel;
      sc.frames = an.frames;
      if (!data_dir.empty()) sc.data_dir = data_dir;
      return serve(std::move(sc));
    }
    return kOk;
  } catch (const Error& e) {
    const int rc = exit_code(e.code(), command);
    std::cerr << "error: " << e.what() << std::endl;
    print_summary(Json{{"command", command}, {"status", "error"}, {"code", to_string(e.code())}, {"exit", rc}});
    return rc;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    print_summary(Json{{"command", command}, {"status", "error"}, {"code", "Unexpected"}, {"exit", kUnexpected}});
    return kUnexpected;
  }
}
