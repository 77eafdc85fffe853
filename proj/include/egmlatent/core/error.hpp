#pragma once

#include <stdexcept>
#include <string>

namespace egmlatent {

enum class ErrorKind {
  Dimension,
  Configuration,
  Corruption,
  Version,
  DegenerateBatch,
  DegenerateData,
  Divergence,
  TaskInfeasible,
  Stratification,
  UndefinedAuc,
  UnsupportedRate,
  TooShort,
  MissingArtifact,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace egmlatent
