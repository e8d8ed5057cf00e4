#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ntrl {

/// Machine-readable failure category carried by every ntrl::Error.
enum class ErrorCode {
  MissingFile,
  SchemaViolation,
  DanglingReference,
  PoolSizeMismatch,
  UnsupportedLevel,
  EmptyEncounter,
  InvalidEncounter,
  InvalidParty,
  InvalidDice,
  UnknownClass,
  ShapeMismatch,
  TraceMismatch,
  VersionMismatch,
  CorruptCheckpoint,
  NonFiniteGradient,
  InvalidConfig,
  InvalidTier,
  Io,
  BadRequest,
  UnknownSession,
  WrongCount,
  DuplicateEncounter,
  NoModelLoaded,
  PackUnavailable,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MISSING_FILE";
    case ErrorCode::SchemaViolation: return "SCHEMA_VIOLATION";
    case ErrorCode::DanglingReference: return "DANGLING_REFERENCE";
    case ErrorCode::PoolSizeMismatch: return "POOL_SIZE_MISMATCH";
    case ErrorCode::UnsupportedLevel: return "UNSUPPORTED_LEVEL";
    case ErrorCode::EmptyEncounter: return "EMPTY_ENCOUNTER";
    case ErrorCode::InvalidEncounter: return "INVALID_ENCOUNTER";
    case ErrorCode::InvalidParty: return "INVALID_PARTY";
    case ErrorCode::InvalidDice: return "INVALID_DICE";
    case ErrorCode::UnknownClass: return "UNKNOWN_CLASS";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::TraceMismatch: return "TRACE_MISMATCH";
    case ErrorCode::VersionMismatch: return "VERSION_MISMATCH";
    case ErrorCode::CorruptCheckpoint: return "CORRUPT_CHECKPOINT";
    case ErrorCode::NonFiniteGradient: return "NON_FINITE_GRADIENT";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::InvalidTier: return "INVALID_TIER";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::BadRequest: return "BAD_REQUEST";
    case ErrorCode::UnknownSession: return "UNKNOWN_SESSION";
    case ErrorCode::WrongCount: return "WRONG_COUNT";
    case ErrorCode::DuplicateEncounter: return "DUPLICATE_ENCOUNTER";
    case ErrorCode::NoModelLoaded: return "NO_MODEL_LOADED";
    case ErrorCode::PackUnavailable: return "PACK_UNAVAILABLE";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  /// JSON-path-like location of the offending field, empty when not applicable.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::string field_;
};

}  // namespace ntrl
