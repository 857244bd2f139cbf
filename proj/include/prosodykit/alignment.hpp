#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "prosodykit/dsp.hpp"

namespace prosodykit {

struct Phone {
  std::string label;
  double start_s = 0.0;
  double end_s = 0.0;

  double duration_s() const noexcept { return end_s - start_s; }
  friend bool operator==(const Phone&, const Phone&) = default;
};

// Ordered, non-overlapping phone intervals. Gaps between consecutive
// intervals are filled with explicit "sil" entries on construction.
class PhoneAlignment {
 public:
  PhoneAlignment() = default;
  // Throws OverlapError if intervals are empty, negative or out of order.
  explicit PhoneAlignment(std::vector<Phone> phones);

  const std::vector<Phone>& phones() const noexcept { return phones_; }
  std::size_t size() const noexcept { return phones_.size(); }
  bool empty() const noexcept { return phones_.empty(); }
  const Phone& operator[](std::size_t i) const { return phones_[i]; }
  double end_s() const noexcept { return phones_.empty() ? 0.0 : phones_.back().end_s; }
  std::vector<std::string> labels() const;

  friend bool operator==(const PhoneAlignment&, const PhoneAlignment&) = default;

 private:
  std::vector<Phone> phones_;
};

enum class AlignmentFormat { lab, textgrid };

PhoneAlignment parse_lab(std::string_view text);
// Long-format Praat TextGrid; reads the first interval tier named "phones"
// (case-insensitive). Empty interval texts become "sil".
PhoneAlignment parse_textgrid(std::string_view text);
// TextGrid when the text carries the ooTextFile header, lab otherwise.
AlignmentFormat sniff_alignment_format(std::string_view text);
PhoneAlignment parse_alignment(std::string_view text, AlignmentFormat format);

PhoneAlignment load_alignment(const std::filesystem::path& path, AlignmentFormat format);
PhoneAlignment load_alignment(const std::filesystem::path& path);

std::string format_lab(const PhoneAlignment& align);
void save_lab(const PhoneAlignment& align, const std::filesystem::path& path);

struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const FrameRange&, const FrameRange&) = default;
};

// [floor(start/hop), floor(end/hop)) clamped to [0, n_frames); never empty.
FrameRange frames_for_phone(const PhoneAlignment& align, std::size_t phone_index, double hop_ms,
                            std::size_t n_frames);

// Per-frame features used to align two renditions: z-normalised log-F0
// (unvoiced frames enter as 0 before normalisation) and z-normalised
// log-energy.
Matrix alignment_features(const FrameTrack& track);

// Warps the reference alignment onto the target rendition by DTW over
// alignment_features of both tracks.
PhoneAlignment transfer_alignment(const PhoneAlignment& ref_align, const FrameTrack& ref_track,
                                  const FrameTrack& tgt_track);

}  // namespace prosodykit
