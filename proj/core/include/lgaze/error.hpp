#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lgaze {

enum class ErrorKind {
  // geometry
  DegeneratePose,
  PointAtInfinity,
  ZeroVector,
  GimbalDegenerate,
  SingularMatrix,
  InvalidArgument,
  // pnp
  PointBehindCamera,
  TooFewPoints,
  SingularNormalEquations,
  DegenerateConfiguration,
  // neural / training
  DimensionMismatch,
  ZeroPrediction,
  StaleTape,
  EmptySplit,
  DivergedLoss,
  // trees
  EmptyData,
  // evaluation
  EmptySet,
  MissingModel,
  // data
  ParseError,
  SchemaVersionMismatch,
  EmptySplitProduced,
  RejectionLimit,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; `kind()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// Parse failures carry the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace lgaze
