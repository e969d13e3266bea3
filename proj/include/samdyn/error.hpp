#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace samdyn {

enum class ErrorKind {
  invalid_matrix,
  oracle_failure,
  dim_error,
  degenerate_leading_eigenvalue,
  sam_undefined,
  singular_spectrum,
  potential_singular,
  step_size_too_large,
  spectral_gap_required,
  epsilon_out_of_range,
  drift_hypothesis_violated,
  invalid_argument,
  io_error,
  config_error,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_matrix: return "InvalidMatrix";
    case ErrorKind::oracle_failure: return "OracleFailure";
    case ErrorKind::dim_error: return "DimError";
    case ErrorKind::degenerate_leading_eigenvalue: return "DegenerateLeadingEigenvalue";
    case ErrorKind::sam_undefined: return "SamUndefined";
    case ErrorKind::singular_spectrum: return "SingularSpectrum";
    case ErrorKind::potential_singular: return "PotentialSingular";
    case ErrorKind::step_size_too_large: return "StepSizeTooLarge";
    case ErrorKind::spectral_gap_required: return "SpectralGapRequired";
    case ErrorKind::epsilon_out_of_range: return "EpsilonOutOfRange";
    case ErrorKind::drift_hypothesis_violated: return "DriftHypothesisViolated";
    case ErrorKind::invalid_argument: return "InvalidArgument";
    case ErrorKind::io_error: return "IoError";
    case ErrorKind::config_error: return "ConfigError";
  }
  return "Unknown";
}

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindedError : public Error {
 public:
  explicit KindedError(const std::string& what) : Error(K, what) {}
};

using InvalidMatrix = KindedError<ErrorKind::invalid_matrix>;
using OracleFailure = KindedError<ErrorKind::oracle_failure>;
using DimError = KindedError<ErrorKind::dim_error>;
using DegenerateLeadingEigenvalue = KindedError<ErrorKind::degenerate_leading_eigenvalue>;
using SamUndefined = KindedError<ErrorKind::sam_undefined>;
using SingularSpectrum = KindedError<ErrorKind::singular_spectrum>;
using PotentialSingular = KindedError<ErrorKind::potential_singular>;
using StepSizeTooLarge = KindedError<ErrorKind::step_size_too_large>;
using SpectralGapRequired = KindedError<ErrorKind::spectral_gap_required>;
using EpsilonOutOfRange = KindedError<ErrorKind::epsilon_out_of_range>;
using DriftHypothesisViolated = KindedError<ErrorKind::drift_hypothesis_violated>;
using InvalidArgument = KindedError<ErrorKind::invalid_argument>;
using IoError = KindedError<ErrorKind::io_error>;

/// Configuration error that remembers which key was at fault.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorKind::config_error, "'" + key + "': " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace samdyn
