#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prosodykit {

enum class ErrorCode {
  FileNotFound,
  UnsupportedEncoding,
  CorruptHeader,
  IoError,
  BufferTooShort,
  InvalidSpec,
  ParseError,
  OverlapError,
  IndexOutOfRange,
  EmptyInput,
  HopMismatch,
  CoverageError,
  AllUnvoiced,
  AlreadyNormalized,
  NotNormalized,
  NonpositiveMean,
  PhoneSequenceMismatch,
  InvalidValue,
  NormalizedTrack,
  PlanMismatch,
  SampleRateMismatch,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above; the
// CLI and HTTP layers map codes to exit statuses and response codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prosodykit
