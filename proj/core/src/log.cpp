#include "scopealign/log.hpp"
#include "scopealign/error.hpp"

#include <iostream>
#include <utility>

namespace scopealign {

namespace {
WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
  return s;
}
}  // namespace

void warn(std::string_view message) {
  if (auto& s = sink()) s(message);
}

WarningSink set_warning_sink(WarningSink s) { return std::exchange(sink(), std::move(s)); }

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::DegenerateRow: return "degenerate-row error";
    case ErrorKind::NonFinite: return "non-finite-input error";
    case ErrorKind::TargetNormalization: return "target-normalization error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::UnsteppedParameter: return "unstepped-parameter error";
    case ErrorKind::EmptyInput: return "empty-input error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::EmptyText: return "empty-text error";
    case ErrorKind::Normalization: return "normalization error";
    case ErrorKind::InvalidAttribute: return "invalid-attribute error";
    case ErrorKind::EmptyAttendee: return "empty-attendee error";
    case ErrorKind::DegenerateAggregate: return "degenerate-aggregate error";
    case ErrorKind::DegenerateBatch: return "degenerate-batch error";
    case ErrorKind::MetricUndefined: return "metric-undefined error";
    case ErrorKind::Fingerprint: return "fingerprint error";
    case ErrorKind::Tape: return "tape error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

}  // namespace scopealign
