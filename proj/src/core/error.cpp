#include "egmlatent/core/error.hpp"

namespace egmlatent {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Corruption: return "corrupt data";
    case ErrorKind::Version: return "format version mismatch";
    case ErrorKind::DegenerateBatch: return "degenerate batch";
    case ErrorKind::DegenerateData: return "degenerate data";
    case ErrorKind::Divergence: return "training diverged";
    case ErrorKind::TaskInfeasible: return "task infeasible";
    case ErrorKind::Stratification: return "stratification error";
    case ErrorKind::UndefinedAuc: return "undefined AUC";
    case ErrorKind::UnsupportedRate: return "unsupported sample rate";
    case ErrorKind::TooShort: return "signal too short";
    case ErrorKind::MissingArtifact: return "missing artifact";
    case ErrorKind::Io: return "I/O error";
  }
  return "unknown error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace egmlatent
