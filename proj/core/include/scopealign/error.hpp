#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scopealign {

enum class ErrorKind {
  Dimension,
  DegenerateRow,
  NonFinite,
  TargetNormalization,
  Config,
  Rank,
  UnsteppedParameter,
  EmptyInput,
  Parse,
  Schema,
  EmptyText,
  Normalization,
  InvalidAttribute,
  EmptyAttendee,
  DegenerateAggregate,
  DegenerateBatch,
  MetricUndefined,
  Fingerprint,
  Tape,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every library failure is reported through this type; `kind()` is stable and
/// is what the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace scopealign
