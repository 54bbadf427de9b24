#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace hqm {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class TaskType { yes_no, mcq, captioning, free_form };
enum class Orientation { higher_better, lower_better };
enum class Dimension {
  existence,
  count,
  color,
  action,
  spatial_relation,
  comparison_relation,
  environment,
  text,
};
enum class Level { object, attribute, scene };
enum class Queue { content_validity, criterion };
enum class Label { valid, invalid, hallucinated, clean };

inline constexpr Dimension kAllDimensions[] = {
    Dimension::existence,        Dimension::count,
    Dimension::color,            Dimension::action,
    Dimension::spatial_relation, Dimension::comparison_relation,
    Dimension::environment,      Dimension::text,
};
inline constexpr Level kAllLevels[] = {Level::object, Level::attribute,
                                       Level::scene};

std::string_view to_string(TaskType v) noexcept;
std::string_view to_string(Orientation v) noexcept;
std::string_view to_string(Dimension v) noexcept;
std::string_view to_string(Level v) noexcept;
std::string_view to_string(Queue v) noexcept;
std::string_view to_string(Label v) noexcept;

// Parsers throw Error(SchemaViolation, field) on unknown names.
TaskType parse_task_type(std::string_view s, std::string_view field = "task_type");
Orientation parse_orientation(std::string_view s, std::string_view field = "orientation");
Dimension parse_dimension(std::string_view s, std::string_view field = "dimension");
Level parse_level(std::string_view s, std::string_view field = "level");
Queue parse_queue(std::string_view s, std::string_view field = "queue");
Label parse_label(std::string_view s, std::string_view field = "label");

/// {existence,count} -> object, {color,action} -> attribute, rest -> scene.
Level level_of(Dimension d) noexcept;

/// valid/invalid belong to content_validity, hallucinated/clean to criterion.
bool label_fits_queue(Queue q, Label l) noexcept;

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

struct YesNoTruth {
  bool answer = false;
  bool operator==(const YesNoTruth&) const = default;
};

struct McqTruth {
  std::vector<std::string> options;
  int correct_index = 0;
  bool operator==(const McqTruth&) const = default;
};

struct FreeFormTruth {
  std::string answer;
  bool operator==(const FreeFormTruth&) const = default;
};

struct CaptionTruth {
  std::set<std::string> gt_objects;
  std::optional<std::string> reference;
  bool operator==(const CaptionTruth&) const = default;
};

using GroundTruth = std::variant<YesNoTruth, McqTruth, FreeFormTruth, CaptionTruth>;

TaskType task_type_of(const GroundTruth& gt) noexcept;

/// Text form handed to the judge: "yes"/"no", the correct option text, the
/// free-form answer, or the caption reference (object list when absent).
std::string ground_truth_text(const GroundTruth& gt);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct Sample {
  std::string sample_id;
  std::string image_ref;
  std::optional<std::string> image_facts;
  std::string instruction;
  GroundTruth ground_truth;
  std::optional<Dimension> dimension;
  std::optional<Level> level;

  bool operator==(const Sample&) const = default;
};

struct BenchmarkSpec {
  std::string benchmark_id;
  TaskType task_type = TaskType::free_form;
  Orientation metric_orientation = Orientation::higher_better;
  std::vector<Sample> samples;
  std::string provenance;

  bool operator==(const BenchmarkSpec&) const = default;
};

struct ModelResponse {
  std::string sample_id;
  std::string model_id;
  std::string run_id;
  std::int64_t seed = 0;
  std::string text;
  std::optional<std::int64_t> latency_ms;
  std::string created_at;  // RFC 3339

  bool operator==(const ModelResponse&) const = default;
};

struct ScoreTable {
  std::string benchmark_id;
  std::string run_id;
  std::string metric_name;
  Orientation orientation = Orientation::higher_better;
  std::map<std::string, double> scores;  // model_id -> score
  std::optional<std::map<std::string, std::map<std::string, double>>>
      per_dimension;  // dimension/level name -> model_id -> score

  std::vector<std::string> roster() const;
  bool operator==(const ScoreTable&) const = default;
};

struct AnnotationTarget {
  std::string sample_id;
  std::optional<std::string> model_id;
  std::optional<std::string> run_id;

  auto operator<=>(const AnnotationTarget&) const = default;
};

struct AnnotationRecord {
  std::string annotation_id;
  std::string annotator_id;
  Queue queue = Queue::content_validity;
  AnnotationTarget target;
  Label label = Label::valid;
  std::optional<std::string> note;
  std::string created_at;  // RFC 3339

  bool operator==(const AnnotationRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Metrics whose values are proportions and must stay in [0, 1].
bool is_rate_metric(std::string_view metric_name) noexcept;

// Each throws Error(SchemaViolation, field) on the first violated invariant.
void validate(const Sample& s, TaskType expected);
void validate(const BenchmarkSpec& spec);  // also DuplicateSampleId
void validate(const ScoreTable& table);
void validate(const AnnotationRecord& rec);

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

json to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const json& j);
json to_json(const Sample& s);
Sample sample_from_json(const json& j);
json benchmark_header_json(const BenchmarkSpec& spec);
json to_json(const ModelResponse& r);
ModelResponse response_from_json(const json& j);
json to_json(const ScoreTable& t);
ScoreTable score_table_from_json(const json& j);
json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const json& j);

// ---------------------------------------------------------------------------
// JSONL files
// ---------------------------------------------------------------------------

/// Header line {"kind":"benchmark",...} followed by one Sample per line.
/// Errors: Io, MalformedLine(line_no), DuplicateSampleId(id),
/// SchemaViolation(field) (message carries the line number).
BenchmarkSpec load_benchmark(const std::filesystem::path& path);
void save_benchmark(const BenchmarkSpec& spec, const std::filesystem::path& path);
std::string serialize_benchmark(const BenchmarkSpec& spec);

/// Sorted by (model_id, sample_id, run_id); DuplicateResponseKey on repeats.
void save_responses(std::vector<ModelResponse> responses,
                    const std::filesystem::path& path);
std::vector<ModelResponse> load_responses(const std::filesystem::path& path);
std::vector<ModelResponse> sorted_responses(std::vector<ModelResponse> responses);

void save_score_tables(const std::vector<ScoreTable>& tables,
                       const std::filesystem::path& path);
std::vector<ScoreTable> load_score_tables(const std::filesystem::path& path);

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
void save_annotations(const std::vector<AnnotationRecord>& records,
                      const std::filesystem::path& path);

/// Reads non-empty lines; MalformedLine(line_no) on bad JSON.
std::vector<std::pair<std::size_t, json>> read_jsonl(const std::filesystem::path& path);
/// Atomic (write temp + rename) JSONL writer, LF endings.
void write_jsonl(const std::vector<json>& lines, const std::filesystem::path& path);
void write_text_atomic(const std::string& text, const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// RFC 3339 UTC timestamp with millisecond precision.
std::string format_rfc3339(std::int64_t unix_millis);
std::string now_rfc3339();

}  // namespace hqm
