#include "prosodykit/alignment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "prosodykit/dtw.hpp"
#include "prosodykit/error.hpp"
#include "prosodykit/kernels.hpp"
#include "text_util.hpp"

namespace prosodykit {
namespace {

using detail::format_double;

constexpr double kTimeEps = 1e-9;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string_view strip_bom(std::string_view s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF && static_cast<unsigned char>(s[1]) == 0xBB &&
      static_cast<unsigned char>(s[2]) == 0xBF)
    return s.substr(3);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Value of a `key = value` TextGrid line, with string quoting removed.
std::string textgrid_string(std::string_view value, std::size_t line) {
  value = trim(value);
  if (value.size() < 2 || value.front() != '"' || value.back() != '"') parse_error(line, "expected quoted string");
  std::string out;
  value = value.substr(1, value.size() - 2);
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(value[i]);
    if (value[i] == '"' && i + 1 < value.size() && value[i + 1] == '"') ++i;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorCode::FileNotFound, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

PhoneAlignment::PhoneAlignment(std::vector<Phone> phones) {
  for (std::size_t i = 0; i < phones.size(); ++i) {
    Phone& p = phones[i];
    if (!(p.start_s >= 0.0) || !std::isfinite(p.end_s))
      throw Error(ErrorCode::OverlapError, "phone " + std::to_string(i) + " starts before 0");
    if (!(p.end_s > p.start_s))
      throw Error(ErrorCode::OverlapError, "phone " + std::to_string(i) + " has non-positive duration");
    if (!phones_.empty()) {
      const double prev_end = phones_.back().end_s;
      if (p.start_s < prev_end - kTimeEps)
        throw Error(ErrorCode::OverlapError, "phone " + std::to_string(i) + " starts at " + format_double(p.start_s) +
                                                 " before previous end " + format_double(prev_end));
      if (p.start_s > prev_end + kTimeEps) phones_.push_back({"sil", prev_end, p.start_s});
      else p.start_s = prev_end;
    }
    phones_.push_back(std::move(p));
  }
}

std::vector<std::string> PhoneAlignment::labels() const {
  std::vector<std::string> out;
  out.reserve(phones_.size());
  for (const auto& p : phones_) out.push_back(p.label);
  return out;
}

PhoneAlignment parse_lab(std::string_view text) {
  text = strip_bom(text);
  std::vector<Phone> phones;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    std::string_view fields[2];
    for (auto& f : fields) {
      const auto sp = line.find_first_of(" \t");
      if (sp == std::string_view::npos) parse_error(line_no, "expected 'start end label'");
      f = line.substr(0, sp);
      line = trim(line.substr(sp));
    }
    if (line.empty()) parse_error(line_no, "missing label");
    const auto start = to_double(fields[0]);
    const auto end = to_double(fields[1]);
    if (!start || !end) parse_error(line_no, "malformed time value");
    phones.push_back({std::string(line), *start, *end});
  }
  return PhoneAlignment(std::move(phones));
}

PhoneAlignment parse_textgrid(std::string_view text) {
  text = strip_bom(text);
  struct Tier {
    std::string cls;
    std::string name;
    std::vector<Phone> intervals;
  };
  std::vector<Tier> tiers;
  bool in_interval = false;
  std::size_t line_no = 0;

  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    if (line.starts_with("item [") && line.ends_with(":")) {
      tiers.emplace_back();
      in_interval = false;
      continue;
    }
    if (tiers.empty()) continue;
    Tier& tier = tiers.back();
    if (line.starts_with("intervals [") || line.starts_with("points [")) {
      in_interval = line.starts_with("intervals [");
      if (in_interval) tier.intervals.push_back({"", 0.0, 0.0});
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));

    if (key == "class") {
      tier.cls = textgrid_string(value, line_no);
    } else if (key == "name") {
      tier.name = textgrid_string(value, line_no);
    } else if (in_interval && (key == "xmin" || key == "xmax")) {
      const auto v = to_double(value);
      if (!v) parse_error(line_no, "malformed time value");
      (key == "xmin" ? tier.intervals.back().start_s : tier.intervals.back().end_s) = *v;
    } else if (in_interval && key == "text") {
      auto label = textgrid_string(value, line_no);
      const auto t = trim(label);
      tier.intervals.back().label = t.empty() ? "sil" : std::string(t);
    }
  }

  if (tiers.empty()) throw Error(ErrorCode::ParseError, "no tiers found in TextGrid");
  for (auto& tier : tiers) {
    if (tier.cls == "IntervalTier" && lower(tier.name) == "phones") return PhoneAlignment(std::move(tier.intervals));
  }
  throw Error(ErrorCode::ParseError, "TextGrid has no interval tier named 'phones'");
}

AlignmentFormat sniff_alignment_format(std::string_view text) {
  text = trim(strip_bom(text));
  return text.starts_with("File type") ? AlignmentFormat::textgrid : AlignmentFormat::lab;
}

PhoneAlignment parse_alignment(std::string_view text, AlignmentFormat format) {
  return format == AlignmentFormat::textgrid ? parse_textgrid(text) : parse_lab(text);
}

PhoneAlignment load_alignment(const std::filesystem::path& path, AlignmentFormat format) {
  return parse_alignment(read_file(path), format);
}

PhoneAlignment load_alignment(const std::filesystem::path& path) {
  const auto text = read_file(path);
  return parse_alignment(text, sniff_alignment_format(text));
}

std::string format_lab(const PhoneAlignment& align) {
  std::string out;
  for (const auto& p : align.phones()) {
    out += format_double(p.start_s);
    out += ' ';
    out += format_double(p.end_s);
    out += ' ';
    out += p.label;
    out += '\n';
  }
  return out;
}

void save_lab(const PhoneAlignment& align, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << format_lab(align);
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

FrameRange frames_for_phone(const PhoneAlignment& align, std::size_t phone_index, double hop_ms,
                            std::size_t n_frames) {
  if (phone_index >= align.size())
    throw Error(ErrorCode::IndexOutOfRange, "phone index " + std::to_string(phone_index) + " of " +
                                                std::to_string(align.size()));
  if (n_frames == 0) throw Error(ErrorCode::EmptyInput, "track has no frames");
  const double hop_s = hop_ms / 1000.0;
  const Phone& p = align[phone_index];
  const auto to_frame = [&](double t) {
    const double f = std::floor(t / hop_s + 1e-9);
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(n_frames)));
  };
  FrameRange r{to_frame(p.start_s), to_frame(p.end_s)};
  if (r.begin >= n_frames) r.begin = n_frames - 1;
  if (r.end <= r.begin) r.end = r.begin + 1;
  return r;
}

Matrix alignment_features(const FrameTrack& track) {
  const std::size_t n = track.n_frames();
  Matrix feats(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    feats(i, 0) = track.f0_hz[i] > 0.0 ? std::log(track.f0_hz[i]) : 0.0;
    feats(i, 1) = std::log(track.energy[i] + 1e-8);
  }
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += feats(i, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (feats(i, c) - mean) * (feats(i, c) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) feats(i, c) = sd > 1e-12 ? (feats(i, c) - mean) / sd : feats(i, c) - mean;
  }
  return feats;
}

PhoneAlignment transfer_alignment(const PhoneAlignment& ref_align, const FrameTrack& ref_track,
                                  const FrameTrack& tgt_track) {
  if (ref_align.empty() || ref_track.n_frames() == 0 || tgt_track.n_frames() == 0)
    throw Error(ErrorCode::EmptyInput, "alignment transfer needs non-empty alignment and tracks");
  if (std::abs(ref_track.hop_ms - tgt_track.hop_ms) > 1e-9)
    throw Error(ErrorCode::HopMismatch, "reference and target tracks use different hops");

  const double hop_s = ref_track.hop_ms / 1000.0;
  const std::size_t n_ref = ref_track.n_frames();
  const std::size_t n_tgt = tgt_track.n_frames();
  const auto path = dtw(kernels::omp::euclidean_cost(alignment_features(ref_track), alignment_features(tgt_track)));

  // first target frame paired with each reference frame
  std::vector<std::size_t> first_tgt(n_ref, 0);
  std::vector<bool> seen(n_ref, false);
  for (const auto& [i, j] : path.pairs) {
    if (!seen[i]) {
      seen[i] = true;
      first_tgt[i] = j;
    }
  }

  const auto map_time = [&](double t) {
    const auto frame = static_cast<std::size_t>(std::max(0.0, std::floor(t / hop_s + 1e-9)));
    if (frame >= n_ref) return t + static_cast<double>(n_tgt) * hop_s - static_cast<double>(n_ref) * hop_s;
    return static_cast<double>(first_tgt[frame]) * hop_s + (t - static_cast<double>(frame) * hop_s);
  };

  constexpr double kMinDuration = 1e-3;
  std::vector<Phone> out;
  out.reserve(ref_align.size());
  double prev_end = -1.0;
  for (const auto& p : ref_align.phones()) {
    double start = out.empty() ? std::max(0.0, map_time(p.start_s)) : prev_end;
    double end = std::max(map_time(p.end_s), start + kMinDuration);
    out.push_back({p.label, start, end});
    prev_end = end;
  }
  return PhoneAlignment(std::move(out));
}

}  // namespace prosodykit
