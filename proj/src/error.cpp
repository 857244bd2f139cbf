#include "prosodykit/error.hpp"

namespace prosodykit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BufferTooShort: return "BufferTooShort";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::HopMismatch: return "HopMismatch";
    case ErrorCode::CoverageError: return "CoverageError";
    case ErrorCode::AllUnvoiced: return "AllUnvoiced";
    case ErrorCode::AlreadyNormalized: return "AlreadyNormalized";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::NonpositiveMean: return "NonpositiveMean";
    case ErrorCode::PhoneSequenceMismatch: return "PhoneSequenceMismatch";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::NormalizedTrack: return "NormalizedTrack";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::SampleRateMismatch: return "SampleRateMismatch";
  }
  return "Unknown";
}

}  // namespace prosodykit
