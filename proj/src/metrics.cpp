#include "prosodykit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "prosodykit/dtw.hpp"
#include "prosodykit/error.hpp"
#include "prosodykit/kernels.hpp"
#include "text_util.hpp"

namespace prosodykit {
namespace {

using detail::csv_field;
using detail::format_double;

constexpr double kMaxRelativeDeviation = 0.2;

void require_same_rate(const AudioBuffer& a, const AudioBuffer& b) {
  if (a.sample_rate != b.sample_rate)
    throw Error(ErrorCode::SampleRateMismatch,
                std::to_string(a.sample_rate) + " Hz vs " + std::to_string(b.sample_rate) + " Hz");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

std::string render_svg(const std::vector<std::pair<std::string, FrameTrack>>& curves) {
  constexpr double width = 800.0, panel = 160.0, margin = 40.0;
  double f0_max = 1.0, t_max = 1e-3;
  for (const auto& [name, tr] : curves) {
    for (double f : tr.f0_hz) f0_max = std::max(f0_max, f);
    t_max = std::max(t_max, tr.duration_s());
  }
  std::ostringstream svg;
  const double height = panel * static_cast<double>(curves.size()) + margin;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  for (std::size_t s = 0; s < curves.size(); ++s) {
    const auto& [name, tr] = curves[s];
    const double top = margin / 2 + panel * static_cast<double>(s);
    const double plot_h = panel - margin;
    svg << "<rect x=\"" << margin << "\" y=\"" << top << "\" width=\"" << width - 2 * margin << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#888\"/>\n";
    svg << "<text x=\"" << margin << "\" y=\"" << top - 4 << "\" font-size=\"12\">" << name << "</text>\n";
    std::string points;
    const auto flush = [&] {
      if (!points.empty()) svg << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < tr.n_frames(); ++i) {
      if (tr.f0_hz[i] <= 0.0) {
        flush();
        continue;
      }
      const double x = margin + (width - 2 * margin) * (static_cast<double>(i) * tr.hop_ms / 1000.0) / t_max;
      const double y = top + plot_h * (1.0 - tr.f0_hz[i] / f0_max);
      points += format_double(std::round(x * 10) / 10) + "," + format_double(std::round(y * 10) / 10) + " ";
    }
    flush();
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

double msd_from_features(const Matrix& ref, const Matrix& test) {
  if (ref.rows() == 0 || test.rows() == 0) throw Error(ErrorCode::EmptyInput, "no frames to compare");
  if (ref.cols() != test.cols()) throw Error(ErrorCode::InvalidSpec, "feature dimensions differ");
  const auto path = dtw(kernels::omp::euclidean_cost(ref, test));
  return path.cost / static_cast<double>(path.length());
}

double msd(const AudioBuffer& ref, const AudioBuffer& test, const MelSpec& mel, const FrameSpec& frames) {
  require_same_rate(ref, test);
  return msd_from_features(log_mel_spectrogram(ref, mel, frames), log_mel_spectrogram(test, mel, frames));
}

bool is_pitch_error(double ref_f0, double test_f0) {
  const bool ref_voiced = ref_f0 > 0.0;
  const bool test_voiced = test_f0 > 0.0;
  if (ref_voiced != test_voiced) return true;
  return ref_voiced && std::abs(test_f0 - ref_f0) > kMaxRelativeDeviation * ref_f0;
}

MetricReport ffe_from_tracks(const FrameTrack& ref, const FrameTrack& test) {
  MetricReport r;
  r.n_frames_ref = ref.n_frames();
  r.n_frames_test = test.n_frames();
  r.n_evaluated = std::min(r.n_frames_ref, r.n_frames_test);
  for (std::size_t i = 0; i < r.n_evaluated; ++i) {
    const double a = ref.f0_hz[i], b = test.f0_hz[i];
    if ((a > 0.0) != (b > 0.0)) ++r.n_voicing_errors;
    else if (is_pitch_error(a, b)) ++r.n_f0_deviation_errors;
  }
  r.ffe = r.n_evaluated ? static_cast<double>(r.n_voicing_errors + r.n_f0_deviation_errors) /
                              static_cast<double>(r.n_evaluated)
                        : 0.0;
  return r;
}

MetricReport ffe(const AudioBuffer& ref, const AudioBuffer& test, const PitchSpec& pitch) {
  require_same_rate(ref, test);
  return ffe_from_tracks(track_pitch(ref, pitch), track_pitch(test, pitch));
}

MetricReport evaluate(const AudioBuffer& ref, const AudioBuffer& test, const MelSpec& mel, const FrameSpec& frames,
                      const PitchSpec& pitch) {
  MetricReport r = ffe(ref, test, pitch);
  r.msd = msd(ref, test, mel, frames);
  return r;
}

void compare_pitch_curves(const std::vector<std::pair<std::string, AudioBuffer>>& signals, const PitchSpec& pitch,
                          const std::filesystem::path& csv_out, const std::optional<std::filesystem::path>& svg_out) {
  if (signals.empty()) throw Error(ErrorCode::EmptyInput, "no signals to compare");
  std::vector<std::pair<std::string, FrameTrack>> curves;
  for (const auto& [name, audio] : signals) curves.emplace_back(name, track_pitch(audio, pitch));

  std::string csv = "name,time_s,f0_hz\n";
  for (const auto& [name, tr] : curves) {
    for (std::size_t i = 0; i < tr.n_frames(); ++i) {
      csv += csv_field(name);
      csv += ',';
      csv += format_double(static_cast<double>(i) * tr.hop_ms / 1000.0);
      csv += ',';
      csv += format_double(tr.f0_hz[i]);
      csv += '\n';
    }
  }
  write_text(csv_out, csv);
  if (svg_out) write_text(*svg_out, render_svg(curves));
}

std::vector<ManifestRow> parse_manifest(std::string_view text) {
  std::vector<ManifestRow> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": expected ref_path,test_path");
    ManifestRow row{std::string(trim(line.substr(0, comma))), std::string(trim(line.substr(comma + 1)))};
    if (rows.empty() && line_no == 1 && row.ref == "ref_path") continue;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<EvalRow> evaluate_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& base_dir,
                                       const MelSpec& mel, const FrameSpec& frames, const PitchSpec& pitch) {
  std::vector<EvalRow> out(rows.size());
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  const auto n = static_cast<long>(rows.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    auto& row = out[static_cast<std::size_t>(i)];
    row.pair = rows[static_cast<std::size_t>(i)];
    try {
      const auto ref = load_wav(resolve(row.pair.ref));
      const auto test = load_wav(resolve(row.pair.test));
      row.report = evaluate(ref, test, mel, frames, pitch);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  return out;
}

std::string format_report_csv(const std::vector<EvalRow>& rows) {
  std::string csv = "ref,test,msd,ffe,voicing_errors,f0_errors,frames,error\n";
  for (const auto& row : rows) {
    csv += csv_field(row.pair.ref) + ',' + csv_field(row.pair.test) + ',';
    if (row.report) {
      const auto& r = *row.report;
      csv += format_double(r.msd.value_or(0.0)) + ',' + format_double(r.ffe) + ',' +
             std::to_string(r.n_voicing_errors) + ',' + std::to_string(r.n_f0_deviation_errors) + ',' +
             std::to_string(r.n_evaluated) + ',';
    } else {
      csv += ",,,,,";
    }
    csv += csv_field(row.error) + '\n';
  }
  return csv;
}

}  // namespace prosodykit
