#pragma once

#include <stdexcept>
#include <string>

namespace orchard {

enum class ErrorCode {
  EmptyInput,
  DegenerateLine,
  DegenerateInput,
  DegenerateMarker,
  MarkerNoiseTooHigh,
  EmptyRoi,
  NoTrellisFound,
  NoTrunkCandidates,
  EmptyTrees,
  AlignmentFailed,
  ShapeError,
  SpecError,
  ParseError,
  IoError,
  ConfigError,
};

constexpr const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateLine: return "DegenerateLine";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DegenerateMarker: return "DegenerateMarker";
    case ErrorCode::MarkerNoiseTooHigh: return "MarkerNoiseTooHigh";
    case ErrorCode::EmptyRoi: return "EmptyRoi";
    case ErrorCode::NoTrellisFound: return "NoTrellisFound";
    case ErrorCode::NoTrunkCandidates: return "NoTrunkCandidates";
    case ErrorCode::EmptyTrees: return "EmptyTrees";
    case ErrorCode::AlignmentFailed: return "AlignmentFailed";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit path) can branch on the cause.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace orchard
