#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opnp {

enum class ErrorKind {
  DimensionMismatch,
  NonFiniteValue,
  InvalidArgument,
  NonPositiveTemperature,
  EmptyInput,
  EmptySelection,
  UnknownStatistic,
  BandEmpty,
  LengthMismatch,
  InvalidRange,
  NoValidConfig,
  EmptyMask,
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  TruncatedFile,
  SizeMismatch,
  SchemaError,
  IoFailure,
  InvalidSpec,
  DivergedTraining,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::UnknownStatistic: return "UnknownStatistic";
    case ErrorKind::BandEmpty: return "BandEmpty";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::NoValidConfig: return "NoValidConfig";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::DivergedTraining: return "DivergedTraining";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) { throw Error(kind, detail); }

inline void require(bool ok, ErrorKind kind, const std::string& detail) {
  if (!ok) fail(kind, detail);
}

}  // namespace opnp
