#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace afflow {

enum class ErrorKind {
  ChartViolation,
  OutOfDomain,
  EmptyInput,
  BoundaryNode,
  DegenerateHessian,
  IllConditioned,
  PastExtinction,
  NotUnimodular,
  OutsideCone,
  ConvexityLost,
  EmptyTruncation,
  EmptyBowl,
  FloorViolated,
  DegenerateSimplex,
  SingularFrame,
  InsufficientSamples,
  AmbiguousSignature,
  InvalidArgument,
  ConfigInvalid,
  MissingArtifact,
  Io,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ChartViolation: return "ChartViolation";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BoundaryNode: return "BoundaryNode";
    case ErrorKind::DegenerateHessian: return "DegenerateHessian";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::PastExtinction: return "PastExtinction";
    case ErrorKind::NotUnimodular: return "NotUnimodular";
    case ErrorKind::OutsideCone: return "OutsideCone";
    case ErrorKind::ConvexityLost: return "ConvexityLost";
    case ErrorKind::EmptyTruncation: return "EmptyTruncation";
    case ErrorKind::EmptyBowl: return "EmptyBowl";
    case ErrorKind::FloorViolated: return "FloorViolated";
    case ErrorKind::DegenerateSimplex: return "DegenerateSimplex";
    case ErrorKind::SingularFrame: return "SingularFrame";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::AmbiguousSignature: return "AmbiguousSignature";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace afflow
