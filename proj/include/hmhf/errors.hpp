#pragma once

#include <stdexcept>
#include <string>

namespace hmhf {

enum class Errc {
  InvalidArgument,
  InvalidProfile,
  DegenerateCritical,
  NotAnEquator,
  NoFlankingMinima,
  NonMinimalBase,
  SeriesDivergence,
  StepFailure,
  BlowUp,
  Unbounded,
  TangencySuspected,
  NoBracket,
  NonMonotoneBracket,
  JumpNotFound,
  CriterionNotMet,
  DegenerateMode,
  DivergentQuadrature,
  NonConvergence,
  StepRejected,
  SchemaError,
};

const char* to_string(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string path, std::string reason)
      : Error(Errc::SchemaError, path + " " + reason), path_(std::move(path)), reason_(std::move(reason)) {}
  const std::string& path() const { return path_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string path_;
  std::string reason_;
};

}  // namespace hmhf
