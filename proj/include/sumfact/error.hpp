#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sumfact {

enum class ErrorKind {
  EmptyInput,
  SchemaMismatch,
  DuplicateId,
  EmptySentences,
  EndpointUnavailable,
  Timeout,
  MalformedResponse,
  InvalidConfig,
  NoJsonFound,
  UnbalancedBrackets,
  WrongArity,
  UnknownCategory,
  MissingKey,
  Exhausted,
  DegenerateGroundTruth,
  ConstantVector,
  TooFewPoints,
  KeyMismatch,
  TooFewSystems,
  MisalignedInputs,
  CoverageMismatch,
  InvalidRecord,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every library failure is reported through this type; `kind()` is the
/// stable identifier written to failure reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sumfact
