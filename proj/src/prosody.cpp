#include "prosodykit/prosody.hpp"

#include <cmath>

#include "prosodykit/error.hpp"

namespace prosodykit {
namespace {

// Scale that maps one track's values into another's space: 1 for a
// normalised track, the voiced means for an absolute one.
VoicedMeans register_of(const ProsodyTrack& t) { return t.normalized ? VoicedMeans{1.0, 1.0} : voiced_means(t); }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidValue, std::string(what) + " must be finite");
}

}  // namespace

std::vector<std::string> ProsodyTrack::labels() const {
  std::vector<std::string> out;
  out.reserve(phones.size());
  for (const auto& p : phones) out.push_back(p.label);
  return out;
}

void ProsodyTrack::validate() const {
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const auto& p = phones[i];
    const std::string where = "phone " + std::to_string(i) + ": ";
    if (!(p.duration_s > 0.0) || !std::isfinite(p.duration_s))
      throw Error(ErrorCode::InvalidValue, where + "duration must be positive");
    if (!(p.f0 >= 0.0) || !std::isfinite(p.f0)) throw Error(ErrorCode::InvalidValue, where + "f0 must be >= 0");
    if (!(p.energy >= 0.0) || !std::isfinite(p.energy))
      throw Error(ErrorCode::InvalidValue, where + "energy must be >= 0");
    if (!(p.voiced_fraction >= 0.0 && p.voiced_fraction <= 1.0))
      throw Error(ErrorCode::InvalidValue, where + "voiced_fraction must lie in [0, 1]");
    if ((p.f0 == 0.0) != (p.voiced_fraction == 0.0))
      throw Error(ErrorCode::InvalidValue, where + "f0 is zero exactly when voiced_fraction is zero");
  }
  if (normalized) {
    if (!f0_ref_mean || !energy_ref_mean || !(*f0_ref_mean > 0.0) || !(*energy_ref_mean > 0.0))
      throw Error(ErrorCode::InvalidValue, "normalised track needs positive reference means");
  } else if (f0_ref_mean || energy_ref_mean) {
    throw Error(ErrorCode::InvalidValue, "reference means are only present on normalised tracks");
  }
}

VoicedMeans voiced_means(const ProsodyTrack& track) {
  double f0_sum = 0.0, e_sum = 0.0;
  std::size_t f0_n = 0, e_n = 0;
  for (const auto& p : track.phones) {
    if (p.f0 > 0.0) {
      f0_sum += p.f0;
      ++f0_n;
    }
    if (p.energy > 0.0) {
      e_sum += p.energy;
      ++e_n;
    }
  }
  if (f0_n == 0) throw Error(ErrorCode::AllUnvoiced, "no phone has a nonzero f0");
  if (e_n == 0) throw Error(ErrorCode::AllUnvoiced, "no phone has nonzero energy");
  return {f0_sum / static_cast<double>(f0_n), e_sum / static_cast<double>(e_n)};
}

void require_same_phones(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i])
      throw Error(ErrorCode::PhoneSequenceMismatch,
                  "position " + std::to_string(i) + ": '" + a[i] + "' vs '" + b[i] + "'");
  }
  if (a.size() != b.size())
    throw Error(ErrorCode::PhoneSequenceMismatch, "position " + std::to_string(n) + ": lengths " +
                                                      std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

ProsodyTrack average_per_phone(const FrameTrack& track, const PhoneAlignment& align) {
  if (track.n_frames() == 0) throw Error(ErrorCode::EmptyInput, "frame track is empty");
  const double tolerance = 0.5 * track.hop_ms / 1000.0;
  if (align.end_s() > track.duration_s() + tolerance)
    throw Error(ErrorCode::CoverageError, "alignment ends at " + std::to_string(align.end_s()) +
                                              " s but the track covers " + std::to_string(track.duration_s()) + " s");

  ProsodyTrack out;
  out.phones.reserve(align.size());
  for (std::size_t k = 0; k < align.size(); ++k) {
    const auto range = frames_for_phone(align, k, track.hop_ms, track.n_frames());
    double f0_sum = 0.0, e_sum = 0.0;
    std::size_t voiced = 0;
    for (std::size_t i = range.begin; i < range.end; ++i) {
      if (track.f0_hz[i] > 0.0) {
        f0_sum += track.f0_hz[i];
        ++voiced;
      }
      e_sum += track.energy[i];
    }
    PhoneProsody p;
    p.label = align[k].label;
    p.duration_s = align[k].duration_s();
    p.f0 = voiced ? f0_sum / static_cast<double>(voiced) : 0.0;
    p.energy = e_sum / static_cast<double>(range.size());
    p.voiced_fraction = static_cast<double>(voiced) / static_cast<double>(range.size());
    out.phones.push_back(std::move(p));
  }
  return out;
}

ProsodyTrack normalize(const ProsodyTrack& track) {
  if (track.normalized) throw Error(ErrorCode::AlreadyNormalized, "track is already normalised");
  const auto means = voiced_means(track);
  ProsodyTrack out = track;
  for (auto& p : out.phones) {
    p.f0 /= means.f0;
    p.energy /= means.energy;
  }
  out.normalized = true;
  out.f0_ref_mean = means.f0;
  out.energy_ref_mean = means.energy;
  return out;
}

ProsodyTrack denormalize(const ProsodyTrack& track, double f0_mean, double energy_mean) {
  if (!track.normalized) throw Error(ErrorCode::NotNormalized, "track holds absolute values");
  if (!(f0_mean > 0.0) || !(energy_mean > 0.0))
    throw Error(ErrorCode::NonpositiveMean, "means must be positive");
  ProsodyTrack out = track;
  for (auto& p : out.phones) {
    p.f0 *= f0_mean;
    p.energy *= energy_mean;
  }
  out.normalized = false;
  out.f0_ref_mean.reset();
  out.energy_ref_mean.reset();
  return out;
}

ProsodyTrack clone_prosody(const ProsodyTrack& reference, const ProsodyTrack& target_base) {
  require_same_phones(reference.labels(), target_base.labels());
  const VoicedMeans from = register_of(reference);
  const VoicedMeans to = register_of(target_base);
  const double f0_scale = to.f0 / from.f0;
  const double energy_scale = to.energy / from.energy;

  ProsodyTrack out = reference;
  for (auto& p : out.phones) {
    p.f0 *= f0_scale;
    p.energy *= energy_scale;
  }
  out.normalized = target_base.normalized;
  out.f0_ref_mean = target_base.f0_ref_mean;
  out.energy_ref_mean = target_base.energy_ref_mean;
  return out;
}

void validate_script(const EditScript& script, std::size_t n_phones) {
  for (std::size_t i = 0; i < script.ops.size(); ++i) {
    const auto& op = script.ops[i];
    const std::string where = "op " + std::to_string(i) + ": ";
    if (op.phone >= n_phones)
      throw Error(ErrorCode::IndexOutOfRange,
                  where + "phone " + std::to_string(op.phone) + " of " + std::to_string(n_phones));
    require_finite(op.value, "edit value");
    switch (op.kind) {
      case EditKind::set_f0:
      case EditKind::set_energy:
        if (op.value < 0.0) throw Error(ErrorCode::InvalidValue, where + "set value must be >= 0");
        break;
      case EditKind::set_duration:
      case EditKind::scale_f0:
      case EditKind::scale_energy:
      case EditKind::scale_duration:
        if (!(op.value > 0.0)) throw Error(ErrorCode::InvalidValue, where + "value must be > 0");
        break;
    }
  }
}

ProsodyTrack apply_edits(const ProsodyTrack& track, const EditScript& script) {
  if (track.normalized)
    throw Error(ErrorCode::InvalidValue, "edits apply to absolute values; denormalise the track first");
  validate_script(script, track.size());

  ProsodyTrack out = track;
  for (const auto& op : script.ops) {
    auto& p = out.phones[op.phone];
    switch (op.kind) {
      case EditKind::set_f0:
        p.f0 = op.value;
        // keep the voicing flag consistent with the new value
        if (p.f0 == 0.0) p.voiced_fraction = 0.0;
        else if (p.voiced_fraction == 0.0) p.voiced_fraction = 1.0;
        break;
      case EditKind::set_energy: p.energy = op.value; break;
      case EditKind::set_duration: p.duration_s = op.value; break;
      case EditKind::scale_f0: p.f0 *= op.value; break;
      case EditKind::scale_energy: p.energy *= op.value; break;
      case EditKind::scale_duration: p.duration_s *= op.value; break;
    }
  }
  out.validate();
  return out;
}

ProsodyTrack splice(const ProsodyTrack& context, const ProsodyTrack& donor, SpliceRegion region) {
  require_same_phones(context.labels(), donor.labels());
  if (region.start_phone > region.end_phone || region.end_phone >= context.size())
    throw Error(ErrorCode::IndexOutOfRange, "splice region [" + std::to_string(region.start_phone) + ", " +
                                                std::to_string(region.end_phone) + "] invalid for " +
                                                std::to_string(context.size()) + " phones");

  const VoicedMeans from = register_of(donor);
  const VoicedMeans to = register_of(context);
  const double f0_scale = to.f0 / from.f0;
  const double energy_scale = to.energy / from.energy;

  ProsodyTrack out = context;
  for (std::size_t k = region.start_phone; k <= region.end_phone; ++k) {
    PhoneProsody p = donor.phones[k];
    p.f0 *= f0_scale;
    p.energy *= energy_scale;
    out.phones[k] = std::move(p);
  }
  return out;
}

}  // namespace prosodykit
