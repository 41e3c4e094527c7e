#pragma once

#include <stdexcept>
#include <string>

namespace signlab {

/// Coarse error category. Maps one-to-one onto the CLI exit codes.
enum class ErrorCategory {
  kHypothesis,  ///< a mathematical hypothesis on the inputs does not hold
  kNumerical,   ///< a solve or iteration failed numerically
  kConfig,      ///< malformed input or configuration
};

/// Base class of every error thrown by the library.
///
/// `code()` is a stable machine-readable tag such as "complex_spectrum" or
/// "near_singular_shift"; `what()` carries a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string code, const std::string& message)
      : std::runtime_error(message), category_(category), code_(std::move(code)) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorCategory category_;
  std::string code_;
};

class HypothesisViolation : public Error {
 public:
  HypothesisViolation(std::string code, const std::string& message)
      : Error(ErrorCategory::kHypothesis, std::move(code), message) {}
};

/// Raised when a theorem check is requested on data that does not satisfy
/// the theorem's assumptions; `code()` names the failing clause.
class HypothesisNotMet : public Error {
 public:
  HypothesisNotMet(std::string clause, const std::string& message)
      : Error(ErrorCategory::kHypothesis, std::move(clause), message) {}
};

class NumericalFailure : public Error {
 public:
  NumericalFailure(std::string code, const std::string& message)
      : Error(ErrorCategory::kNumerical, std::move(code), message) {}
};

class NearSingularShift : public NumericalFailure {
 public:
  explicit NearSingularShift(const std::string& message)
      : NumericalFailure("near_singular_shift", message) {}
};

class ConvergenceFailure : public NumericalFailure {
 public:
  explicit ConvergenceFailure(const std::string& message)
      : NumericalFailure("convergence_failure", message) {}
};

class SingularSystem : public NumericalFailure {
 public:
  explicit SingularSystem(const std::string& message)
      : NumericalFailure("singular_system", message) {}
};

/// The expected sign pattern does not hold even at the smallest offset
/// from the eigenvalue that the search examines.
class PatternAbsent : public NumericalFailure {
 public:
  explicit PatternAbsent(const std::string& message)
      : NumericalFailure("pattern_absent", message) {}
};

class AtEigenvalue : public NumericalFailure {
 public:
  explicit AtEigenvalue(const std::string& message)
      : NumericalFailure("at_eigenvalue", message) {}
};

class ConfigError : public Error {
 public:
  ConfigError(std::string code, const std::string& message)
      : Error(ErrorCategory::kConfig, std::move(code), message) {}
};

class InvalidGrid : public ConfigError {
 public:
  explicit InvalidGrid(const std::string& message) : ConfigError("invalid_grid", message) {}
};

}  // namespace signlab
