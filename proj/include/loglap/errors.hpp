#pragma once

#include <stdexcept>
#include <string>

namespace loglap {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  success = 0,
  validation = 2,
  admissibility = 3,
  convergence = 4,
  numerical_integrity = 5,
};

class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what, ExitCode code)
      : std::runtime_error(what), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode exit_code() const noexcept { return code_; }

private:
  std::string kind_;
  ExitCode code_;
};

#define LOGLAP_DEFINE_ERROR(Name, Code)                                  \
  class Name : public Error {                                            \
  public:                                                                \
    explicit Name(const std::string& what) : Error(#Name, what, Code) {} \
  };

LOGLAP_DEFINE_ERROR(ValidationError, ExitCode::validation)
LOGLAP_DEFINE_ERROR(DegenerateModel, ExitCode::validation)
LOGLAP_DEFINE_ERROR(AdmissibilityError, ExitCode::admissibility)
LOGLAP_DEFINE_ERROR(BallViolation, ExitCode::admissibility)
LOGLAP_DEFINE_ERROR(MaxItersExceeded, ExitCode::convergence)
LOGLAP_DEFINE_ERROR(BracketFailure, ExitCode::numerical_integrity)
LOGLAP_DEFINE_ERROR(ImaginaryResidue, ExitCode::numerical_integrity)
LOGLAP_DEFINE_ERROR(ZeroModePresent, ExitCode::numerical_integrity)
LOGLAP_DEFINE_ERROR(GridMismatch, ExitCode::numerical_integrity)

#undef LOGLAP_DEFINE_ERROR

}  // namespace loglap
