// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
// Speech fixtures are rendered by the synthetic-speech support library.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "prosodykit/dtw.hpp"
#include "prosodykit/json_io.hpp"
#include "prosodykit/metrics.hpp"
#include "prosodykit/prosody.hpp"
#include "prosodykit/resynth.hpp"
#include "synth_speech.hpp"
#include "test_util.hpp"

using namespace prosodykit;
using namespace prosodykit::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& run) {
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ProsodyTrack measure(const AudioBuffer& audio, const PhoneAlignment& align) {
  return average_per_phone(track_pitch(audio), align);
}

constexpr double kHop = 0.010;
constexpr double kF0Tol = 0.05;
constexpr double kEnergyTol = 0.10;

// The F0 target applies to phones the target marks as mostly voiced.
bool f0_hit(const PhoneProsody& want, const PhoneProsody& got) {
  if (want.voiced_fraction < 0.5) return true;
  return got.f0 > 0.0 && std::abs(got.f0 - want.f0) <= kF0Tol * want.f0;
}
bool duration_hit(const PhoneProsody& want, const PhoneProsody& got) {
  return std::abs(got.duration_s - want.duration_s) <= kHop;
}
bool energy_hit(const PhoneProsody& want, const PhoneProsody& got) {
  return want.energy <= 0.0 || std::abs(got.energy - want.energy) <= kEnergyTol * want.energy;
}

Outcome metric_identities() {
  TempDir dir;
  for (std::uint64_t s = 0; s < 10; ++s)
    save_wav(render_speech(make_sentence(s), s % 5 == 4 ? 22050 : 16000, s).audio, dir / (std::to_string(s) + ".wav"));
  const auto t0 = Clock::now();
  std::size_t ok = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto x = load_wav(dir / (std::to_string(s) + ".wav"));
    const auto r = evaluate(x, x);
    ok += *r.msd == 0.0 && r.ffe == 0.0;
  }
  const double t = seconds_since(t0);
  return {ok == 10 && t < 30.0, fmt("%zu/10 files with msd = ffe = 0, %.2f s (limit 30 s)", ok, t)};
}

double brute_force(const Matrix& c, std::size_t i, std::size_t j) {
  if (i == c.rows() - 1 && j == c.cols() - 1) return c(i, j);
  double best = std::numeric_limits<double>::infinity();
  if (i + 1 < c.rows() && j + 1 < c.cols()) best = std::min(best, brute_force(c, i + 1, j + 1));
  if (i + 1 < c.rows()) best = std::min(best, brute_force(c, i + 1, j));
  if (j + 1 < c.cols()) best = std::min(best, brute_force(c, i, j + 1));
  return c(i, j) + best;
}

Outcome dtw_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  std::uniform_int_distribution<int> cost(0, 1000);
  std::size_t ok = 0;
  for (int t = 0; t < 200; ++t) {
    Matrix m(dim(rng), dim(rng));
    // dyadic costs keep every path sum exact in double precision
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = cost(rng) / 64.0;
    ok += dtw(m).cost == brute_force(m, 0, 0);
  }
  return {ok == 200, fmt("%zu/200 random matrices up to 6x6 match exhaustive search exactly", ok)};
}

Outcome ffe_threshold() {
  std::size_t ok = 0, n = 0;
  for (double ref : {60.0, 100.0, 137.5, 220.0, 399.0}) {
    const auto track = [](double f0) { return FrameTrack{{f0}, {0.1}, 10.0}; };
    for (double dev : {0.199, -0.199}) {
      ok += ffe_from_tracks(track(ref), track(ref * (1.0 + dev))).ffe == 0.0;
      ++n;
    }
    for (double dev : {0.201, -0.201}) {
      ok += ffe_from_tracks(track(ref), track(ref * (1.0 + dev))).ffe == 1.0;
      ++n;
    }
  }
  return {ok == n, fmt("%zu/%zu frame pairs classified correctly at +-19.9%% / +-20.1%%", ok, n)};
}

Outcome normalization() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> f0(50.0, 500.0), en(1e-4, 1.0), dur(0.01, 0.4);
  std::bernoulli_distribution unvoiced(0.35);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    ProsodyTrack track;
    const std::size_t n = 2 + static_cast<std::size_t>(t % 30);
    for (std::size_t k = 0; k < n; ++k) {
      PhoneProsody p{"p", dur(rng), f0(rng), en(rng), 1.0};
      if (k > 0 && unvoiced(rng)) p.f0 = p.voiced_fraction = 0.0;
      track.phones.push_back(p);
    }
    const auto norm = normalize(track);
    double sum = 0.0;
    std::size_t voiced = 0;
    for (const auto& p : norm.phones)
      if (p.f0 != 0.0) {
        sum += p.f0;
        ++voiced;
      }
    worst = std::max(worst, std::abs(sum / static_cast<double>(voiced) - 1.0));
  }
  return {worst <= 1e-6, fmt("worst |mean ratio - 1| = %.3g over 100 random tracks (limit 1e-6)", worst)};
}

Outcome closed_loop() {
  std::size_t ok = 0, total = 0;
  double slowest = 0.0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto sp = render_speech(make_sentence(20 + s), s == 5 ? 22050 : 16000, s);
    const auto t0 = Clock::now();
    const auto extracted = measure(sp.audio, sp.alignment);
    const auto res = resynthesize_prosody(sp.audio, sp.alignment, extracted);
    const auto again = measure(res.audio, res.alignment);
    slowest = std::max(slowest, seconds_since(t0));
    for (std::size_t k = 0; k < extracted.size(); ++k) {
      ++total;
      ok += f0_hit(extracted.phones[k], again.phones[k]) && duration_hit(extracted.phones[k], again.phones[k]);
    }
  }
  const double rate = static_cast<double>(ok) / static_cast<double>(total);
  return {rate >= 0.95 && slowest < 10.0,
          fmt("%zu/%zu phones (%.1f%%, need 95%%) within 5%% F0 and 1 hop on 6 utterances; slowest %.2f s (limit 10 s)",
              ok, total, 100.0 * rate, slowest)};
}

Outcome controllability() {
  std::size_t ok = 0, edited = 0, f0_ok = 0, f0_n = 0, e_ok = 0, d_ok = 0;
  for (std::uint64_t s = 0; s < 12; ++s) {
    const auto sp = render_speech(make_sentence(40 + s), 16000, s);
    const auto base = measure(sp.audio, sp.alignment);
    std::mt19937_64 rng(1000 + s);
    std::uniform_real_distribution<double> factor(0.7, 1.4);
    EditScript script;
    for (std::size_t k = 0; k < base.size(); ++k) {
      if (base.phones[k].label == "sil") continue;
      script.ops.push_back({EditKind::scale_f0, k, factor(rng)});
      script.ops.push_back({EditKind::scale_energy, k, factor(rng)});
      script.ops.push_back({EditKind::scale_duration, k, factor(rng)});
    }
    const auto target = apply_edits(base, script);
    const auto res = resynthesize_prosody(sp.audio, sp.alignment, target);
    const auto got = measure(res.audio, res.alignment);
    for (std::size_t k = 0; k < base.size(); ++k) {
      if (base.phones[k].label == "sil") continue;
      const auto& w = target.phones[k];
      const auto& g = got.phones[k];
      ++edited;
      const bool f = f0_hit(w, g), e = energy_hit(w, g), d = duration_hit(w, g);
      if (w.voiced_fraction >= 0.5) {
        ++f0_n;
        f0_ok += f;
      }
      e_ok += e;
      d_ok += d;
      ok += f && e && d;
    }
  }
  const double rate = static_cast<double>(ok) / static_cast<double>(edited);
  return {rate >= 0.90, fmt("%zu/%zu edited phones (%.1f%%, need 90%%) hit all targets; F0 %zu/%zu voiced, "
                            "energy %zu/%zu, duration %zu/%zu",
                            ok, edited, 100.0 * rate, f0_ok, f0_n, e_ok, edited, d_ok, edited)};
}

Outcome splice_locality() {
  std::size_t out_ok = 0, out_n = 0, in_ok = 0, in_n = 0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    const auto sentence = make_sentence(60 + s);
    const auto ctx = render_speech(perturb_prosody(sentence, 3 * s), 16000, 3 + s);
    const auto donor = render_speech(perturb_prosody(sentence, 3 * s + 1), 16000, 5 + s);
    const auto cp = measure(ctx.audio, ctx.alignment);
    const auto dp = measure(donor.audio, donor.alignment);
    const std::size_t n = cp.size();
    const std::size_t a = 3 + s % 3, b = std::min(n - 4, a + 3 + s % 4);
    const auto target = splice(cp, dp, {a, b});
    const auto res = resynthesize_prosody(ctx.audio, ctx.alignment, target);
    const auto got = measure(res.audio, res.alignment);
    for (std::size_t k = 0; k < n; ++k) {
      // the phones touching the region share a boundary glide with it
      if (k + 1 == a || k == b + 1) continue;
      const auto& w = target.phones[k];
      const auto& g = got.phones[k];
      if (k >= a && k <= b) {
        ++in_n;
        in_ok += f0_hit(w, g) && energy_hit(w, g) && duration_hit(w, g);
      } else {
        ++out_n;
        out_ok += f0_hit(w, g) && duration_hit(w, g);
      }
    }
  }
  const double in_rate = static_cast<double>(in_ok) / static_cast<double>(in_n);
  return {out_ok == out_n && in_rate >= 0.90,
          fmt("outside region %zu/%zu within closed-loop tolerance of the context; inside %zu/%zu (need 90%%) "
              "on donor targets",
              out_ok, out_n, in_ok, in_n)};
}

Outcome clone_ordering() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto sentence = make_sentence(100 + i);
    const auto ref = render_speech(perturb_prosody(sentence, 2 * i), 16000, 11 + i);
    const auto base = render_speech(perturb_prosody(sentence, 2 * i + 1), 16000, 51 + i);
    const auto cloned = clone_prosody(measure(ref.audio, ref.alignment), measure(base.audio, base.alignment));
    const auto out = resynthesize_prosody(base.audio, base.alignment, cloned);
    const auto before = evaluate(ref.audio, base.audio);
    const auto after = evaluate(ref.audio, out.audio);
    const bool win = *after.msd < *before.msd && after.ffe < before.ffe;
    wins += win;
    detail += fmt("%s[msd %.2f->%.2f ffe %.3f->%.3f]", i ? " " : "", *before.msd, *after.msd, before.ffe, after.ffe);
  }
  return {wins >= 4, fmt("%d/5 pairs (need 4) closer to the reference after cloning ", wins) + detail};
}

Json strip_timestamps(Json j) {
  if (j.is_object() && j.contains("provenance"))
    for (auto& e : j["provenance"]) e.erase("timestamp");
  return j;
}

Outcome cli_determinism() {
  TempDir dir;
  const auto sentence = make_sentence(7);
  const auto a = render_speech(sentence, 16000, 1);
  const auto b = render_speech(perturb_prosody(sentence, 9), 16000, 2);
  save_wav(a.audio, dir / "a.wav");
  save_lab(a.alignment, dir / "a.lab");
  save_wav(b.audio, dir / "b.wav");
  save_lab(b.alignment, dir / "b.lab");
  write_file(dir / "script.json", R"({"ops":[{"op":"scale_f0","phone":2,"value":1.15},)"
                                  R"({"op":"scale_duration","phone":3,"value":0.8}]})");
  write_file(dir / "manifest.csv", "a.wav,b.wav\na.wav,a.wav\n");

  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  struct Step {
    std::vector<std::string> args;
    std::vector<std::string> outputs;
  };
  const std::vector<Step> steps{
      {{"extract", "--audio", p("a.wav"), "--align", p("a.lab"), "--out", p("a.json"), "--track-out", p("a_track.json")},
       {"a.json", "a_track.json"}},
      {{"extract", "--audio", p("b.wav"), "--align", p("b.lab"), "--out", p("b.json")}, {"b.json"}},
      {{"clone", "--ref-prosody", p("a.json"), "--target-audio", p("b.wav"), "--target-align", p("b.lab"), "--out",
        p("c.json")},
       {"c.json"}},
      {{"edit", "--prosody", p("a.json"), "--script", p("script.json"), "--out", p("e.json")}, {"e.json"}},
      {{"splice", "--context", p("a.json"), "--donor", p("b.json"), "--start-phone", "2", "--end-phone", "4", "--out",
        p("s.json")},
       {"s.json"}},
      {{"resynth", "--base-audio", p("b.wav"), "--base-align", p("b.lab"), "--prosody", p("c.json"), "--out",
        p("r.wav"), "--plan-out", p("plan.json")},
       {"r.wav", "plan.json"}},
      {{"eval", "--manifest", p("manifest.csv"), "--out", p("report.csv")}, {"report.csv"}},
      {{"pitch-curves", "--audio", p("a.wav"), "--audio", p("b.wav"), "--out", p("curves.csv"), "--svg",
        p("curves.svg")},
       {"curves.csv", "curves.svg"}},
  };

  // Run the pipeline twice over the same paths; compare each output with its
  // first-run snapshot.
  std::map<std::string, std::string> first;
  std::size_t same = 0, compared = 0;
  std::string bad;
  for (int run = 0; run < 2; ++run) {
    for (const auto& step : steps) {
      std::vector<std::string> argv{PROSODYKIT_CLI};
      argv.insert(argv.end(), step.args.begin(), step.args.end());
      const auto r = run_process(argv);
      if (r.exit_code != 0) return {false, step.args[0] + " exited " + std::to_string(r.exit_code) + ": " + r.err};
      for (const auto& out : step.outputs) {
        auto bytes = read_file(dir / out);
        if (out.ends_with(".json")) bytes = strip_timestamps(Json::parse(bytes)).dump();
        if (run == 0) {
          first[out] = std::move(bytes);
          continue;
        }
        ++compared;
        const bool equal = first[out] == bytes;
        same += equal;
        if (!equal) bad += " " + out;
      }
    }
  }
  return {same == compared, fmt("%zu/%zu outputs of 8 commands byte-identical across two runs (timestamps excluded)",
                                same, compared) + (bad.empty() ? "" : "; differing:" + bad)};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  report("metric-identities", metric_identities);
  report("dtw-oracle", dtw_oracle);
  report("ffe-threshold", ffe_threshold);
  report("normalization-invariant", normalization);
  report("closed-loop-resynthesis", closed_loop);
  report("controllability", controllability);
  report("splice-locality", splice_locality);
  report("clone-ordering", clone_ordering);
  report("cli-determinism", cli_determinism);
  std::printf("%d failed, %.1f s\n", failures, seconds_since(t0));
  return failures ? 1 : 0;
}
