#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hqm {

enum class Errc {
  // io / schema
  Io,
  MalformedLine,
  DuplicateSampleId,
  DuplicateResponseKey,
  SchemaViolation,
  InvalidArgument,
  Config,
  // stats
  LengthMismatch,
  DegenerateVariance,
  TooFewPoints,
  NonFinite,
  SubsetTooLarge,
  // parallel forms
  ParaphraseFailure,
  TransformAbort,
  // judge
  Transport,
  AuthFailure,
  RateLimited,
  Timeout,
  JudgeMalformedOutput,
  MissingImageFacts,
  ScoreOutOfRange,
  JudgeAbort,
  // metrics
  CoverageGap,
  EmptyLexicon,
  EmptySet,
  // quality
  RosterMismatch,
  MetricMismatch,
  OrientationMismatch,
  MissingAnnotations,
  // benchgen
  GenerationFailure,
  QuotaShortfall,
  // runner
  SourceUnavailable,
  // annotation service
  UnknownQueue,
  UnknownTask,
  LeaseExpired,
  LeaseNotHeld,
  InvalidLabelForQueue,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure surfaced by the toolkit. `detail()` carries the offending
/// field, id, or line number so callers can report it without parsing what().
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail, const std::string& message = {})
      : std::runtime_error(compose(code, detail, message)),
        code_(code),
        detail_(std::move(detail)) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string compose(Errc code, const std::string& detail,
                             const std::string& message) {
    std::string out(to_string(code));
    if (!detail.empty()) out += "(" + detail + ")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  Errc code_;
  std::string detail_;
};

}  // namespace hqm
