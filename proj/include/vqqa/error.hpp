#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vqqa {

enum class ErrorKind {
  EmptyInput,
  SequenceViolation,
  PreconditionFailed,
  ConfigError,
  BackendUnavailable,
  SafetyRejected,
  RateLimited,
  TemperatureRejected,
  UnknownAspect,
  MalformedResponse,
  CountViolation,
  PrefixViolation,
  CountMismatch,
  RangeViolation,
  MissingSlot,
  NoJsonFound,
  SchemaViolation,
  UnparsableRating,
  MissingQaMeans,
  IndexOutOfRange,
  DegenerateDenominator,
  IoFailure,
  CorruptLine,
};

std::string_view to_string(ErrorKind kind);

// Process exit status for the CLI: 2 config, 3 backend, 4 parse/schema, 1 other.
int exit_code(ErrorKind kind);

// Every failure surfaced by the library is a vqqa::Error carrying a typed
// kind. `detail` holds the locating context (JSON path, line number, missing
// slot names); `raw_responses` keeps model output that failed to parse.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

  int attempts() const noexcept { return attempts_; }
  Error& with_attempts(int n) {
    attempts_ = n;
    return *this;
  }

  const std::vector<std::string>& raw_responses() const noexcept { return raw_responses_; }
  Error& with_raw_responses(std::vector<std::string> raws) {
    raw_responses_ = std::move(raws);
    return *this;
  }

 private:
  ErrorKind kind_;
  std::string detail_;
  int attempts_ = 0;
  std::vector<std::string> raw_responses_;
};

enum class SchemaFault { MissingKey, WrongType, OutOfRange, Empty };

// Raised by parse_agent_json when a payload fails its role schema.
class SchemaError : public Error {
 public:
  SchemaError(SchemaFault fault, const std::string& message, std::string path)
      : Error(ErrorKind::SchemaViolation, message, std::move(path)), fault_(fault) {}

  SchemaFault fault() const noexcept { return fault_; }
  const std::string& path() const noexcept { return detail(); }

 private:
  SchemaFault fault_;
};

}  // namespace vqqa
