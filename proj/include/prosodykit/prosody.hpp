#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "prosodykit/alignment.hpp"
#include "prosodykit/dsp.hpp"

namespace prosodykit {

struct PhoneProsody {
  std::string label;
  double duration_s = 0.0;
  double f0 = 0.0;      // Hz, or a ratio to the utterance mean when normalised
  double energy = 0.0;  // RMS, or a ratio when normalised
  double voiced_fraction = 0.0;

  friend bool operator==(const PhoneProsody&, const PhoneProsody&) = default;
};

// One value triple per phone: the control representation everything else
// reads and writes.
struct ProsodyTrack {
  std::vector<PhoneProsody> phones;
  bool normalized = false;
  std::optional<double> f0_ref_mean;
  std::optional<double> energy_ref_mean;

  std::size_t size() const noexcept { return phones.size(); }
  std::vector<std::string> labels() const;
  // Throws InvalidValue when a per-phone invariant does not hold.
  void validate() const;

  friend bool operator==(const ProsodyTrack&, const ProsodyTrack&) = default;
};

enum class EditKind { set_f0, set_energy, set_duration, scale_f0, scale_energy, scale_duration };

struct EditOp {
  EditKind kind = EditKind::set_f0;
  std::size_t phone = 0;
  double value = 0.0;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct EditScript {
  std::vector<EditOp> ops;
  friend bool operator==(const EditScript&, const EditScript&) = default;
};

// Inclusive phone index range.
struct SpliceRegion {
  std::size_t start_phone = 0;
  std::size_t end_phone = 0;
};

struct VoicedMeans {
  double f0 = 0.0;
  double energy = 0.0;
};

// Plain means over phones with nonzero f0 (resp. energy). Throws AllUnvoiced
// when no phone qualifies.
VoicedMeans voiced_means(const ProsodyTrack& track);

// Throws PhoneSequenceMismatch naming the first differing position.
void require_same_phones(const std::vector<std::string>& a, const std::vector<std::string>& b);

ProsodyTrack average_per_phone(const FrameTrack& track, const PhoneAlignment& align);

ProsodyTrack normalize(const ProsodyTrack& track);
ProsodyTrack denormalize(const ProsodyTrack& track, double f0_mean, double energy_mean);

// Durations come from the reference; f0 and energy are the reference's
// ratios re-expressed at target_base's register.
ProsodyTrack clone_prosody(const ProsodyTrack& reference, const ProsodyTrack& target_base);

void validate_script(const EditScript& script, std::size_t n_phones);
ProsodyTrack apply_edits(const ProsodyTrack& track, const EditScript& script);

// Phones inside the region take the donor's values (at the context's
// register); phones outside are copied from the context unchanged.
ProsodyTrack splice(const ProsodyTrack& context, const ProsodyTrack& donor, SpliceRegion region);

}  // namespace prosodykit
