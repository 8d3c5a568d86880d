#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace forge {

enum class ErrorCode {
  ParseFailure,
  EmptyContent,
  UnsupportedLanguage,
  MissingSource,
  IndexOutOfRange,
  EmptyReference,
  EmptyInput,
  DegenerateInput,
  InsufficientDays,
  UnreadableSource,
  IoFailure,
  ConfigInvalid,
  StageFailure,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::EmptyContent: return "EmptyContent";
    case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::MissingSource: return "MissingSource";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InsufficientDays: return "InsufficientDays";
    case ErrorCode::UnreadableSource: return "UnreadableSource";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::StageFailure: return "StageFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by config validation; lists every violation found, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(ErrorCode::ConfigInvalid, join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
      if (!out.empty()) out += "; ";
      out += item;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

/// A stage of the end-to-end build failed; `stage()` names it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(ErrorCode::StageFailure, stage + ": " + cause), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace forge
