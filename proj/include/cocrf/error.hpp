#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cocrf {

enum class Errc {
  MalformedHeader,
  MalformedRecord,
  DanglingEdgeEndpoint,
  DuplicateEdge,
  DimensionMismatch,
  NonPositiveBoundaryLength,
  LengthMismatch,
  ImageTooSmall,
  SingleClassCorpus,
  MissingTable,
  MissingGroundTruth,
  StateSpaceTooLarge,
  InconsistentCorpus,
  InferenceFailure,
  MaxIterationsReached,
  EmptyMatrix,
  InvalidArgument,
  Io,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::DanglingEdgeEndpoint: return "DanglingEdgeEndpoint";
    case Errc::DuplicateEdge: return "DuplicateEdge";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonPositiveBoundaryLength: return "NonPositiveBoundaryLength";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::SingleClassCorpus: return "SingleClassCorpus";
    case Errc::MissingTable: return "MissingTable";
    case Errc::MissingGroundTruth: return "MissingGroundTruth";
    case Errc::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case Errc::InconsistentCorpus: return "InconsistentCorpus";
    case Errc::InferenceFailure: return "InferenceFailure";
    case Errc::MaxIterationsReached: return "MaxIterationsReached";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. `line()` is the 1-based input line
/// for parse errors and 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, int line = 0)
      : std::runtime_error(format(code, what, line)), code_(code), line_(line) {}

  Errc code() const noexcept { return code_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(Errc code, const std::string& what, int line) {
    std::string msg(to_string(code));
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    msg += ": ";
    msg += what;
    return msg;
  }

  Errc code_;
  int line_;
};

}  // namespace cocrf
