#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hqm/datamodel.hpp"
#include "hqm/stats.hpp"

namespace hqm::quality {

using stats::CorrelationResult;

/// Eq.-style test-retest: Pearson over the model-aligned score vectors
/// (models sorted by id). Throws MetricMismatch (metric name or orientation),
/// RosterMismatch, and the stats errors.
CorrelationResult test_retest(const ScoreTable& run1, const ScoreTable& run2);

/// Same contract as test_retest; `run_parallel` comes from the parallel form.
CorrelationResult parallel_forms(const ScoreTable& run, const ScoreTable& run_parallel);

struct ContentValidity {
  double validity = 0.0;
  std::size_t n_valid = 0;
  std::size_t n = 0;
};

/// N_valid / N over `subset`. Multiple labels per sample resolve by
/// majority; ties count as invalid. MissingAnnotations lists subset samples
/// without a content_validity label.
ContentValidity content_validity(const std::vector<AnnotationRecord>& annotations,
                                 const std::vector<std::string>& subset);

/// Pearson between automatic and human scores. OrientationMismatch unless
/// both tables share an orientation; no silent reorientation.
CorrelationResult criterion_validity(const ScoreTable& automatic, const ScoreTable& human);

/// Per-model human score from criterion labels over `responses` (the sampled
/// responses). Each response's labels resolve by majority, ties count as
/// hallucinated. lower_better -> "human_hal_rate" (hallucinated / labeled),
/// higher_better -> "human_correct_rate" (1 - that).
ScoreTable human_scores_from_annotations(const std::vector<AnnotationRecord>& annotations,
                                         const std::vector<ModelResponse>& responses, Orientation orientation,
                                         const std::string& benchmark_id = "", const std::string& run_id = "human");

/// Explicit reorientation of a rate table: x -> 1 - x, orientation flipped.
/// InvalidArgument for non-rate metrics.
ScoreTable reorient(const ScoreTable& table);

struct RankRow {
  std::string model_id;
  double score_a = 0.0;
  double score_b = 0.0;
  int rank_a = 0;
  int rank_b = 0;
  int delta = 0;  // rank_b - rank_a; positive means the model fell

  bool operator==(const RankRow&) const = default;
};

/// 1-based ranks by each table's orientation, ties broken by model_id.
/// Rows sorted by model_id. RosterMismatch when rosters differ.
std::vector<RankRow> leaderboard_delta(const ScoreTable& run_a, const ScoreTable& run_b);

/// model_id -> 1-based rank.
std::map<std::string, int> ranks(const ScoreTable& table);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// A computed value or the reason it is unavailable.
template <typename T>
struct Indicator {
  std::variant<T, std::string> value;

  bool available() const { return std::holds_alternative<T>(value); }
  const T& get() const { return std::get<T>(value); }
  const std::string& reason() const { return std::get<std::string>(value); }
  static Indicator unavailable(std::string why) { return {std::variant<T, std::string>(std::in_place_index<1>, "unavailable: " + std::move(why))}; }
};

struct ModelDiagnostics {
  std::optional<double> yes_ratio;
  std::optional<double> yes_ratio_parallel;
  std::optional<double> avg_length;
  std::optional<double> avg_length_parallel;
  std::optional<std::size_t> unparsed;
  std::optional<std::size_t> unparsed_parallel;
};

struct QualityReport {
  std::string benchmark_id;
  std::string metric_name;
  Orientation orientation = Orientation::higher_better;
  std::vector<std::string> model_roster;
  Indicator<CorrelationResult> test_retest;
  Indicator<CorrelationResult> parallel_forms;
  Indicator<ContentValidity> content_validity;
  Indicator<CorrelationResult> criterion_validity;
  std::optional<std::string> criterion_orientation;
  std::uint64_t subset_seed = 0;
  std::size_t subset_size = 0;
  std::map<std::string, ScoreTable> score_tables;  // original / retest / parallel / human
  std::map<std::string, ModelDiagnostics> diagnostics;
  std::vector<RankRow> retest_rank_delta;
  std::vector<RankRow> parallel_rank_delta;
  std::vector<std::string> notes;  // coverage gaps, exclusions
  std::map<std::string, std::string> provenance;  // seeds, template hashes
};

json to_json(const ContentValidity& c);
json to_json(const RankRow& r);
json to_json(const QualityReport& r);

/// Reliability {Test-retest, Parallel-forms} / Validity {Content, Criterion}
/// as a markdown table, followed by diagnostics.
std::string render_markdown(const QualityReport& r);

}  // namespace hqm::quality
