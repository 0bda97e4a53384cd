#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rde {

enum class ErrorKind {
  DimensionMismatch,
  SingularCovariance,
  InsufficientData,
  NonSymmetric,
  InsufficientRank,
  ClassTooSmall,
  UnknownClass,
  EmptyInput,
  InvalidFpr,
  InvalidArgument,
  InsufficientRecords,
  MissingFailedFeatures,
  DigestMismatch,
  SizeMismatch,
  UnknownDtype,
  MalformedManifest,
  IoFailure,
  VersionMismatch,
  TruncatedSection,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonSymmetric: return "NonSymmetric";
    case ErrorKind::InsufficientRank: return "InsufficientRank";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::UnknownClass: return "UnknownClass";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidFpr: return "InvalidFpr";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InsufficientRecords: return "InsufficientRecords";
    case ErrorKind::MissingFailedFeatures: return "MissingFailedFeatures";
    case ErrorKind::DigestMismatch: return "DigestMismatch";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::UnknownDtype: return "UnknownDtype";
    case ErrorKind::MalformedManifest: return "MalformedManifest";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::TruncatedSection: return "TruncatedSection";
  }
  return "Unknown";
}

/// Numeric failures (as opposed to bad input) map to a distinct CLI exit code.
constexpr bool is_numeric_failure(ErrorKind kind) noexcept
{
  return kind == ErrorKind::SingularCovariance || kind == ErrorKind::InsufficientRank;
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
  {
  }

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace rde
