#include "vqqa/error.hpp"

namespace vqqa {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SequenceViolation: return "SequenceViolation";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::SafetyRejected: return "SafetyRejected";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::TemperatureRejected: return "TemperatureRejected";
    case ErrorKind::UnknownAspect: return "UnknownAspect";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::CountViolation: return "CountViolation";
    case ErrorKind::PrefixViolation: return "PrefixViolation";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::MissingSlot: return "MissingSlot";
    case ErrorKind::NoJsonFound: return "NoJsonFound";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::UnparsableRating: return "UnparsableRating";
    case ErrorKind::MissingQaMeans: return "MissingQaMeans";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::CorruptLine: return "CorruptLine";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::string detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message +
                         (detail.empty() ? std::string() : " [" + detail + "]")),
      kind_(kind),
      detail_(std::move(detail)) {}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::PreconditionFailed:
    case ErrorKind::IoFailure:
      return 2;
    case ErrorKind::BackendUnavailable:
    case ErrorKind::SafetyRejected:
    case ErrorKind::RateLimited:
    case ErrorKind::TemperatureRejected:
      return 3;
    case ErrorKind::MalformedResponse:
    case ErrorKind::CountViolation:
    case ErrorKind::PrefixViolation:
    case ErrorKind::CountMismatch:
    case ErrorKind::RangeViolation:
    case ErrorKind::MissingSlot:
    case ErrorKind::NoJsonFound:
    case ErrorKind::SchemaViolation:
    case ErrorKind::UnparsableRating:
    case ErrorKind::UnknownAspect:
    case ErrorKind::IndexOutOfRange:
    case ErrorKind::CorruptLine:
      return 4;
    default:
      return 1;
  }
}

}  // namespace vqqa
