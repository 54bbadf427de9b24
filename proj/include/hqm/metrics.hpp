#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hqm/datamodel.hpp"
#include "hqm/judge.hpp"

namespace hqm::metrics {

enum class ParseMode { first_token, first_sentence_scan, judge_fallback };
std::string_view to_string(ParseMode m) noexcept;
ParseMode parse_mode(std::string_view s);

struct ParsePolicy {
  ParseMode mode = ParseMode::first_sentence_scan;
  bool case_insensitive = true;
};

// -- extraction ---------------------------------------------------------------

/// yes/no from the first whitespace token (first_token) or the first yes/no
/// word of the first sentence (first_sentence_scan and judge_fallback).
std::optional<bool> extract_yes_no(std::string_view response, const ParsePolicy& policy);

/// Option index (A = 0) among `option_count` options. Accepts "B", "B.",
/// "(B)", "B)", "B:". Lower-case letters count only when case_insensitive and
/// the letter is decorated or is the whole response, so the article "a" is
/// never read as option A.
std::optional<int> extract_option(std::string_view response, std::size_t option_count, const ParsePolicy& policy);

// -- accuracy -----------------------------------------------------------------

struct YesNoAccuracy {
  double acc = 0.0;         // matches / N, unparsed count as wrong
  double acc_parsed = 0.0;  // matches / parsed (0 when nothing parsed)
  double yes_ratio = 0.0;   // yes extractions / N
  std::size_t n = 0;
  std::size_t parsed = 0;
  std::size_t unparsed = 0;
  std::vector<std::string> unparsed_ids;
};

struct McqAccuracy {
  double acc = 0.0;
  double acc_parsed = 0.0;
  std::size_t n = 0;
  std::size_t parsed = 0;
  std::size_t unparsed = 0;
  std::vector<std::string> unparsed_ids;
};

/// `responses` are one model's answers; they must cover `samples` exactly
/// (CoverageGap lists missing and unexpected sample ids). `judge` is used
/// only under judge_fallback.
YesNoAccuracy accuracy_yes_no(const std::vector<Sample>& samples, const std::vector<ModelResponse>& responses,
                              const ParsePolicy& policy, const Judge* judge = nullptr);
McqAccuracy accuracy_mcq(const std::vector<Sample>& samples, const std::vector<ModelResponse>& responses,
                         const ParsePolicy& policy, const Judge* judge = nullptr);

// -- CHAIR --------------------------------------------------------------------

/// Surface form -> canonical object name. Lookup is case-insensitive after
/// whitespace/punctuation normalization; the longest surface form wins.
class ObjectLexicon {
 public:
  ObjectLexicon() = default;
  explicit ObjectLexicon(const std::map<std::string, std::string>& surface_to_canonical);

  /// JSON object {"surface": "canonical", ...}.
  static ObjectLexicon load(const std::filesystem::path& path);
  static ObjectLexicon from_json(const json& j);

  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Canonical objects mentioned in `caption`, scanning left to right with
  /// longest match on word boundaries. A trailing plural "s"/"es" on the last
  /// word of a surface form also matches.
  std::set<std::string> mentions(std::string_view caption) const;

 private:
  std::map<std::vector<std::string>, std::string> entries_;
  std::size_t max_words_ = 0;
};

struct ChairSample {
  std::string sample_id;
  std::size_t mentioned = 0;
  std::size_t hallucinated = 0;
  std::optional<double> chair;  // nullopt when nothing was mentioned
  std::vector<std::string> hallucinated_objects;
};

struct ChairResult {
  double chair = 0.0;  // sum hallucinated / sum mentioned, 0 when nothing mentioned
  std::size_t mentioned = 0;
  std::size_t hallucinated = 0;
  std::vector<ChairSample> per_sample;
};

/// captions: sample_id -> caption text. Samples need captioning ground truth.
/// Throws EmptyLexicon, CoverageGap (caption for an unknown sample), and
/// SchemaViolation for non-captioning samples.
ChairResult chair(const std::map<std::string, std::string>& captions, const std::vector<Sample>& samples,
                  const ObjectLexicon& lexicon);

// -- length -------------------------------------------------------------------

/// Mean whitespace-token count. EmptySet on no responses.
double avg_response_length(const std::vector<ModelResponse>& responses);
double avg_response_length(const std::vector<std::string>& texts);

// -- HQH ----------------------------------------------------------------------

struct HqhAggregate {
  double main_hal_pct = 0.0;
  double extra_num_hal = 0.0;
  double overall_hal_pct = 0.0;
  std::size_t n = 0;

  bool operator==(const HqhAggregate&) const = default;
};

struct HqhResult {
  HqhAggregate overall;
  std::map<Dimension, HqhAggregate> per_dimension;
  std::map<Level, HqhAggregate> per_level;
};

/// Main Hal% = mean of [main answer mismatched], Extra #Hal = mean claim
/// count, Overall Hal% = mean of [mismatched or any extra claim]. One verdict
/// per sample (one model); CoverageGap otherwise. Breakdowns use each
/// sample's dimension, and its level (derived from the dimension when unset).
/// The overall values are per-sample weighted.
HqhResult hqh_metrics(const std::vector<JudgeVerdict>& verdicts, const std::vector<Sample>& samples);

/// Same aggregation without coverage checks, for subsets.
HqhAggregate aggregate(const std::vector<const JudgeVerdict*>& verdicts);

}  // namespace hqm::metrics
