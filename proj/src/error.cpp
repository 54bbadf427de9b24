#include "hqm/error.hpp"

namespace hqm {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Io:
      return "Io";
    case Errc::MalformedLine:
      return "MalformedLine";
    case Errc::DuplicateSampleId:
      return "DuplicateSampleId";
    case Errc::DuplicateResponseKey:
      return "DuplicateResponseKey";
    case Errc::SchemaViolation:
      return "SchemaViolation";
    case Errc::InvalidArgument:
      return "InvalidArgument";
    case Errc::Config:
      return "Config";
    case Errc::LengthMismatch:
      return "LengthMismatch";
    case Errc::DegenerateVariance:
      return "DegenerateVariance";
    case Errc::TooFewPoints:
      return "TooFewPoints";
    case Errc::NonFinite:
      return "NonFinite";
    case Errc::SubsetTooLarge:
      return "SubsetTooLarge";
    case Errc::ParaphraseFailure:
      return "ParaphraseFailure";
    case Errc::TransformAbort:
      return "TransformAbort";
    case Errc::Transport:
      return "Transport";
    case Errc::AuthFailure:
      return "AuthFailure";
    case Errc::RateLimited:
      return "RateLimited";
    case Errc::Timeout:
      return "Timeout";
    case Errc::JudgeMalformedOutput:
      return "JudgeMalformedOutput";
    case Errc::MissingImageFacts:
      return "MissingImageFacts";
    case Errc::ScoreOutOfRange:
      return "ScoreOutOfRange";
    case Errc::JudgeAbort:
      return "JudgeAbort";
    case Errc::CoverageGap:
      return "CoverageGap";
    case Errc::EmptyLexicon:
      return "EmptyLexicon";
    case Errc::EmptySet:
      return "EmptySet";
    case Errc::RosterMismatch:
      return "RosterMismatch";
    case Errc::MetricMismatch:
      return "MetricMismatch";
    case Errc::OrientationMismatch:
      return "OrientationMismatch";
    case Errc::MissingAnnotations:
      return "MissingAnnotations";
    case Errc::GenerationFailure:
      return "GenerationFailure";
    case Errc::QuotaShortfall:
      return "QuotaShortfall";
    case Errc::SourceUnavailable:
      return "SourceUnavailable";
    case Errc::UnknownQueue:
      return "UnknownQueue";
    case Errc::UnknownTask:
      return "UnknownTask";
    case Errc::LeaseExpired:
      return "LeaseExpired";
    case Errc::LeaseNotHeld:
      return "LeaseNotHeld";
    case Errc::InvalidLabelForQueue:
      return "InvalidLabelForQueue";
  }
  return "Unknown";
}

}  // namespace hqm
