#include "hqm/datamodel.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "hqm/error.hpp"

namespace hqm {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             std::string_view field) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw Error(Errc::SchemaViolation, std::string(field), "unknown value '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, TaskType>, 4> kTaskTypes{{
    {"yes_no", TaskType::yes_no},
    {"mcq", TaskType::mcq},
    {"captioning", TaskType::captioning},
    {"free_form", TaskType::free_form},
}};
constexpr std::array<std::pair<std::string_view, Orientation>, 2> kOrientations{{
    {"higher_better", Orientation::higher_better},
    {"lower_better", Orientation::lower_better},
}};
constexpr std::array<std::pair<std::string_view, Dimension>, 8> kDimensions{{
    {"existence", Dimension::existence},
    {"count", Dimension::count},
    {"color", Dimension::color},
    {"action", Dimension::action},
    {"spatial_relation", Dimension::spatial_relation},
    {"comparison_relation", Dimension::comparison_relation},
    {"environment", Dimension::environment},
    {"text", Dimension::text},
}};
constexpr std::array<std::pair<std::string_view, Level>, 3> kLevels{{
    {"object", Level::object},
    {"attribute", Level::attribute},
    {"scene", Level::scene},
}};
constexpr std::array<std::pair<std::string_view, Queue>, 2> kQueues{{
    {"content_validity", Queue::content_validity},
    {"criterion", Queue::criterion},
}};
constexpr std::array<std::pair<std::string_view, Label>, 4> kLabels{{
    {"valid", Label::valid},
    {"invalid", Label::invalid},
    {"hallucinated", Label::hallucinated},
    {"clean", Label::clean},
}};

template <typename E, std::size_t N>
std::string_view enum_name(E v, const std::array<std::pair<std::string_view, E>, N>& table) noexcept {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

// -- json field access -------------------------------------------------------

const json& require(const json& j, const char* field) {
  if (!j.is_object()) throw Error(Errc::SchemaViolation, field, "record is not an object");
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) throw Error(Errc::SchemaViolation, field, "missing");
  return *it;
}

std::string get_string(const json& j, const char* field) {
  const auto& v = require(j, field);
  if (!v.is_string()) throw Error(Errc::SchemaViolation, field, "expected string");
  return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::SchemaViolation, field, "expected string");
  return it->get<std::string>();
}

std::int64_t get_int(const json& j, const char* field) {
  const auto& v = require(j, field);
  if (!v.is_number_integer()) throw Error(Errc::SchemaViolation, field, "expected integer");
  return v.get<std::int64_t>();
}

std::optional<std::int64_t> get_opt_int(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw Error(Errc::SchemaViolation, field, "expected integer");
  return it->get<std::int64_t>();
}

double get_number(const json& j, const char* field) {
  if (!j.is_number()) throw Error(Errc::SchemaViolation, field, "expected number");
  return j.get<double>();
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string with_line(std::size_t line_no) { return "line " + std::to_string(line_no); }

}  // namespace

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

std::string_view to_string(TaskType v) noexcept { return enum_name(v, kTaskTypes); }
std::string_view to_string(Orientation v) noexcept { return enum_name(v, kOrientations); }
std::string_view to_string(Dimension v) noexcept { return enum_name(v, kDimensions); }
std::string_view to_string(Level v) noexcept { return enum_name(v, kLevels); }
std::string_view to_string(Queue v) noexcept { return enum_name(v, kQueues); }
std::string_view to_string(Label v) noexcept { return enum_name(v, kLabels); }

TaskType parse_task_type(std::string_view s, std::string_view field) { return parse_enum(s, kTaskTypes, field); }
Orientation parse_orientation(std::string_view s, std::string_view field) { return parse_enum(s, kOrientations, field); }
Dimension parse_dimension(std::string_view s, std::string_view field) { return parse_enum(s, kDimensions, field); }
Level parse_level(std::string_view s, std::string_view field) { return parse_enum(s, kLevels, field); }
Queue parse_queue(std::string_view s, std::string_view field) { return parse_enum(s, kQueues, field); }
Label parse_label(std::string_view s, std::string_view field) { return parse_enum(s, kLabels, field); }

Level level_of(Dimension d) noexcept {
  switch (d) {
    case Dimension::existence:
    case Dimension::count:
      return Level::object;
    case Dimension::color:
    case Dimension::action:
      return Level::attribute;
    default:
      return Level::scene;
  }
}

bool label_fits_queue(Queue q, Label l) noexcept {
  if (q == Queue::content_validity) return l == Label::valid || l == Label::invalid;
  return l == Label::hallucinated || l == Label::clean;
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

TaskType task_type_of(const GroundTruth& gt) noexcept {
  switch (gt.index()) {
    case 0:
      return TaskType::yes_no;
    case 1:
      return TaskType::mcq;
    case 2:
      return TaskType::free_form;
    default:
      return TaskType::captioning;
  }
}

std::string ground_truth_text(const GroundTruth& gt) {
  struct Visitor {
    std::string operator()(const YesNoTruth& t) const { return t.answer ? "yes" : "no"; }
    std::string operator()(const McqTruth& t) const {
      if (t.correct_index < 0 || static_cast<std::size_t>(t.correct_index) >= t.options.size()) return {};
      return t.options[static_cast<std::size_t>(t.correct_index)];
    }
    std::string operator()(const FreeFormTruth& t) const { return t.answer; }
    std::string operator()(const CaptionTruth& t) const {
      if (t.reference) return *t.reference;
      std::string out;
      for (const auto& o : t.gt_objects) {
        if (!out.empty()) out += ", ";
        out += o;
      }
      return out;
    }
  };
  return std::visit(Visitor{}, gt);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<std::string> ScoreTable::roster() const {
  std::vector<std::string> out;
  out.reserve(scores.size());
  for (const auto& [model, _] : scores) out.push_back(model);
  return out;
}

bool is_rate_metric(std::string_view name) noexcept {
  static constexpr std::string_view kRates[] = {
      "accuracy",       "main_hal_pct",     "overall_hal_pct",    "yes_ratio",
      "chair",          "content_validity", "human_hal_rate",     "human_correct_rate",
      "accuracy_parsed",
  };
  return std::find(std::begin(kRates), std::end(kRates), name) != std::end(kRates);
}

void validate(const Sample& s, TaskType expected) {
  if (s.sample_id.empty()) throw Error(Errc::SchemaViolation, "sample_id", "empty");
  if (blank(s.instruction)) throw Error(Errc::SchemaViolation, "instruction", "empty");
  if (task_type_of(s.ground_truth) != expected) {
    throw Error(Errc::SchemaViolation, "ground_truth.type",
                "sample " + s.sample_id + " is " + std::string(to_string(task_type_of(s.ground_truth))) +
                    ", benchmark is " + std::string(to_string(expected)));
  }
  if (const auto* mcq = std::get_if<McqTruth>(&s.ground_truth)) {
    if (mcq->options.size() < 2) throw Error(Errc::SchemaViolation, "options", "need at least 2");
    if (mcq->correct_index < 0 || static_cast<std::size_t>(mcq->correct_index) >= mcq->options.size()) {
      throw Error(Errc::SchemaViolation, "correct_index",
                  std::to_string(mcq->correct_index) + " outside " + std::to_string(mcq->options.size()) + " options");
    }
  }
  if (const auto* cap = std::get_if<CaptionTruth>(&s.ground_truth)) {
    if (cap->gt_objects.empty()) throw Error(Errc::SchemaViolation, "gt_objects", "empty");
    for (const auto& o : cap->gt_objects) {
      if (blank(o)) throw Error(Errc::SchemaViolation, "gt_objects", "blank object name");
    }
  }
  if (s.level && s.dimension && *s.level != level_of(*s.dimension)) {
    throw Error(Errc::SchemaViolation, "level",
                std::string(to_string(*s.dimension)) + " belongs to " + std::string(to_string(level_of(*s.dimension))));
  }
}

void validate(const BenchmarkSpec& spec) {
  if (spec.benchmark_id.empty()) throw Error(Errc::SchemaViolation, "benchmark_id", "empty");
  std::set<std::string> seen;
  for (const auto& s : spec.samples) {
    validate(s, spec.task_type);
    if (!seen.insert(s.sample_id).second) throw Error(Errc::DuplicateSampleId, s.sample_id);
  }
}

void validate(const ScoreTable& t) {
  const bool rate = is_rate_metric(t.metric_name);
  auto check = [&](const std::string& model, double v) {
    if (!std::isfinite(v)) throw Error(Errc::SchemaViolation, "scores", model + " is not finite");
    if (rate && (v < 0.0 || v > 1.0)) {
      throw Error(Errc::SchemaViolation, "scores", model + " outside [0,1] for rate metric " + t.metric_name);
    }
  };
  if (t.metric_name.empty()) throw Error(Errc::SchemaViolation, "metric_name", "empty");
  for (const auto& [m, v] : t.scores) check(m, v);
  if (t.per_dimension) {
    for (const auto& [_, row] : *t.per_dimension) {
      for (const auto& [m, v] : row) check(m, v);
    }
  }
}

void validate(const AnnotationRecord& r) {
  if (r.annotation_id.empty()) throw Error(Errc::SchemaViolation, "annotation_id", "empty");
  if (r.annotator_id.empty()) throw Error(Errc::SchemaViolation, "annotator_id", "empty");
  if (r.target.sample_id.empty()) throw Error(Errc::SchemaViolation, "target", "empty sample_id");
  if (!label_fits_queue(r.queue, r.label)) {
    throw Error(Errc::SchemaViolation, "label",
                std::string(to_string(r.label)) + " is not a " + std::string(to_string(r.queue)) + " label");
  }
  const bool response_target = r.target.model_id.has_value() && r.target.run_id.has_value();
  if (r.queue == Queue::criterion && !response_target) {
    throw Error(Errc::SchemaViolation, "target", "criterion labels need sample_id, model_id and run_id");
  }
  if (r.queue == Queue::content_validity && (r.target.model_id || r.target.run_id)) {
    throw Error(Errc::SchemaViolation, "target", "content_validity labels target a sample only");
  }
}

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

json to_json(const GroundTruth& gt) {
  struct Visitor {
    json operator()(const YesNoTruth& t) const { return {{"type", "yes_no"}, {"answer", t.answer}}; }
    json operator()(const McqTruth& t) const {
      return {{"type", "mcq"}, {"options", t.options}, {"correct_index", t.correct_index}};
    }
    json operator()(const FreeFormTruth& t) const { return {{"type", "free_form"}, {"answer", t.answer}}; }
    json operator()(const CaptionTruth& t) const {
      json j{{"type", "captioning"}, {"gt_objects", t.gt_objects}};
      if (t.reference) j["reference"] = *t.reference;
      return j;
    }
  };
  return std::visit(Visitor{}, gt);
}

GroundTruth ground_truth_from_json(const json& j) {
  const auto type = parse_task_type(get_string(j, "type"), "ground_truth.type");
  switch (type) {
    case TaskType::yes_no: {
      const auto& a = require(j, "answer");
      if (!a.is_boolean()) throw Error(Errc::SchemaViolation, "answer", "expected boolean");
      return YesNoTruth{a.get<bool>()};
    }
    case TaskType::mcq: {
      const auto& opts = require(j, "options");
      if (!opts.is_array()) throw Error(Errc::SchemaViolation, "options", "expected array");
      McqTruth t;
      for (const auto& o : opts) {
        if (!o.is_string()) throw Error(Errc::SchemaViolation, "options", "expected strings");
        t.options.push_back(o.get<std::string>());
      }
      t.correct_index = static_cast<int>(get_int(j, "correct_index"));
      return t;
    }
    case TaskType::free_form:
      return FreeFormTruth{get_string(j, "answer")};
    case TaskType::captioning: {
      const auto& objs = require(j, "gt_objects");
      if (!objs.is_array()) throw Error(Errc::SchemaViolation, "gt_objects", "expected array");
      CaptionTruth t;
      for (const auto& o : objs) {
        if (!o.is_string()) throw Error(Errc::SchemaViolation, "gt_objects", "expected strings");
        t.gt_objects.insert(o.get<std::string>());
      }
      t.reference = get_opt_string(j, "reference");
      return t;
    }
  }
  throw Error(Errc::SchemaViolation, "ground_truth.type");
}

json to_json(const Sample& s) {
  json j{{"sample_id", s.sample_id},
         {"image_ref", s.image_ref},
         {"instruction", s.instruction},
         {"ground_truth", to_json(s.ground_truth)}};
  if (s.image_facts) j["image_facts"] = *s.image_facts;
  if (s.dimension) j["dimension"] = to_string(*s.dimension);
  if (s.level) j["level"] = to_string(*s.level);
  return j;
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.sample_id = get_string(j, "sample_id");
  s.image_ref = get_string(j, "image_ref");
  s.image_facts = get_opt_string(j, "image_facts");
  s.instruction = get_string(j, "instruction");
  s.ground_truth = ground_truth_from_json(require(j, "ground_truth"));
  if (const auto d = get_opt_string(j, "dimension")) s.dimension = parse_dimension(*d);
  if (const auto l = get_opt_string(j, "level")) s.level = parse_level(*l);
  return s;
}

json benchmark_header_json(const BenchmarkSpec& spec) {
  return {{"kind", "benchmark"},
          {"benchmark_id", spec.benchmark_id},
          {"task_type", to_string(spec.task_type)},
          {"metric_orientation", to_string(spec.metric_orientation)},
          {"provenance", spec.provenance}};
}

json to_json(const ModelResponse& r) {
  json j{{"sample_id", r.sample_id}, {"model_id", r.model_id}, {"run_id", r.run_id},
         {"seed", r.seed},           {"text", r.text},         {"created_at", r.created_at}};
  if (r.latency_ms) j["latency_ms"] = *r.latency_ms;
  return j;
}

ModelResponse response_from_json(const json& j) {
  ModelResponse r;
  r.sample_id = get_string(j, "sample_id");
  r.model_id = get_string(j, "model_id");
  r.run_id = get_string(j, "run_id");
  r.seed = get_int(j, "seed");
  r.text = get_string(j, "text");
  r.latency_ms = get_opt_int(j, "latency_ms");
  r.created_at = get_string(j, "created_at");
  if (r.sample_id.empty()) throw Error(Errc::SchemaViolation, "sample_id", "empty");
  if (r.model_id.empty()) throw Error(Errc::SchemaViolation, "model_id", "empty");
  return r;
}

json to_json(const ScoreTable& t) {
  json j{{"benchmark_id", t.benchmark_id},
         {"run_id", t.run_id},
         {"metric_name", t.metric_name},
         {"orientation", to_string(t.orientation)},
         {"scores", t.scores}};
  if (t.per_dimension) j["per_dimension"] = *t.per_dimension;
  return j;
}

ScoreTable score_table_from_json(const json& j) {
  ScoreTable t;
  t.benchmark_id = get_string(j, "benchmark_id");
  t.run_id = get_string(j, "run_id");
  t.metric_name = get_string(j, "metric_name");
  t.orientation = parse_orientation(get_string(j, "orientation"));
  const auto& scores = require(j, "scores");
  if (!scores.is_object()) throw Error(Errc::SchemaViolation, "scores", "expected object");
  for (const auto& [model, v] : scores.items()) t.scores[model] = get_number(v, "scores");
  if (const auto it = j.find("per_dimension"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(Errc::SchemaViolation, "per_dimension", "expected object");
    std::map<std::string, std::map<std::string, double>> per;
    for (const auto& [dim, row] : it->items()) {
      if (!row.is_object()) throw Error(Errc::SchemaViolation, "per_dimension", "expected object");
      for (const auto& [model, v] : row.items()) per[dim][model] = get_number(v, "per_dimension");
    }
    t.per_dimension = std::move(per);
  }
  validate(t);
  return t;
}

json to_json(const AnnotationRecord& r) {
  json target{{"sample_id", r.target.sample_id}};
  if (r.target.model_id) target["model_id"] = *r.target.model_id;
  if (r.target.run_id) target["run_id"] = *r.target.run_id;
  json j{{"annotation_id", r.annotation_id},
         {"annotator_id", r.annotator_id},
         {"queue", to_string(r.queue)},
         {"target", target},
         {"label", to_string(r.label)},
         {"created_at", r.created_at}};
  if (r.note) j["note"] = *r.note;
  return j;
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  r.annotation_id = get_string(j, "annotation_id");
  r.annotator_id = get_string(j, "annotator_id");
  r.queue = parse_queue(get_string(j, "queue"));
  const auto& target = require(j, "target");
  r.target.sample_id = get_string(target, "sample_id");
  r.target.model_id = get_opt_string(target, "model_id");
  r.target.run_id = get_opt_string(target, "run_id");
  r.label = parse_label(get_string(j, "label"));
  r.note = get_opt_string(j, "note");
  r.created_at = get_string(j, "created_at");
  validate(r);
  return r;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::pair<std::size_t, json>> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, path.string(), "cannot open for reading");
  std::vector<std::pair<std::size_t, json>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    try {
      out.emplace_back(line_no, json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(Errc::MalformedLine, std::to_string(line_no), e.what());
    }
    if (!out.back().second.is_object()) {
      throw Error(Errc::MalformedLine, std::to_string(line_no), "expected a JSON object");
    }
  }
  return out;
}

void write_text_atomic(const std::string& text, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, tmp.string(), "cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw Error(Errc::Io, tmp.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, path.string(), ec.message());
}

void write_jsonl(const std::vector<json>& lines, const std::filesystem::path& path) {
  std::string text;
  for (const auto& j : lines) {
    text += j.dump();
    text += '\n';
  }
  write_text_atomic(text, path);
}

std::string serialize_benchmark(const BenchmarkSpec& spec) {
  std::string text = benchmark_header_json(spec).dump() + "\n";
  for (const auto& s : spec.samples) text += to_json(s).dump() + "\n";
  return text;
}

void save_benchmark(const BenchmarkSpec& spec, const std::filesystem::path& path) {
  write_text_atomic(serialize_benchmark(spec), path);
}

BenchmarkSpec load_benchmark(const std::filesystem::path& path) {
  const auto lines = read_jsonl(path);
  if (lines.empty()) throw Error(Errc::MalformedLine, "1", "missing benchmark header");
  BenchmarkSpec spec;
  const auto& [header_line, header] = lines.front();
  try {
    const auto it = header.find("kind");
    if (it == header.end() || *it != "benchmark") {
      throw Error(Errc::SchemaViolation, "kind", "first line must be the benchmark header");
    }
    spec.benchmark_id = get_string(header, "benchmark_id");
    if (spec.benchmark_id.empty()) throw Error(Errc::SchemaViolation, "benchmark_id", "empty");
    spec.task_type = parse_task_type(get_string(header, "task_type"));
    spec.metric_orientation = parse_orientation(get_string(header, "metric_orientation"), "metric_orientation");
    spec.provenance = get_opt_string(header, "provenance").value_or("");
  } catch (const Error& e) {
    if (e.code() != Errc::SchemaViolation) throw;
    throw Error(Errc::SchemaViolation, e.detail(), with_line(header_line) + ": " + e.what());
  }

  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [line_no, j] = lines[i];
    Sample s;
    try {
      s = sample_from_json(j);
      validate(s, spec.task_type);
    } catch (const Error& e) {
      if (e.code() != Errc::SchemaViolation) throw;
      throw Error(Errc::SchemaViolation, e.detail(), with_line(line_no) + ": " + e.what());
    }
    if (!seen.insert(s.sample_id).second) {
      throw Error(Errc::DuplicateSampleId, s.sample_id, with_line(line_no));
    }
    spec.samples.push_back(std::move(s));
  }
  return spec;
}

std::vector<ModelResponse> sorted_responses(std::vector<ModelResponse> responses) {
  std::sort(responses.begin(), responses.end(), [](const ModelResponse& a, const ModelResponse& b) {
    return std::tie(a.model_id, a.sample_id, a.run_id) < std::tie(b.model_id, b.sample_id, b.run_id);
  });
  for (std::size_t i = 1; i < responses.size(); ++i) {
    const auto& a = responses[i - 1];
    const auto& b = responses[i];
    if (a.model_id == b.model_id && a.sample_id == b.sample_id && a.run_id == b.run_id) {
      throw Error(Errc::DuplicateResponseKey, b.sample_id + "/" + b.model_id + "/" + b.run_id);
    }
  }
  return responses;
}

void save_responses(std::vector<ModelResponse> responses, const std::filesystem::path& path) {
  responses = sorted_responses(std::move(responses));
  std::vector<json> lines;
  lines.reserve(responses.size());
  for (const auto& r : responses) lines.push_back(to_json(r));
  write_jsonl(lines, path);
}

std::vector<ModelResponse> load_responses(const std::filesystem::path& path) {
  std::vector<ModelResponse> out;
  for (const auto& [line_no, j] : read_jsonl(path)) {
    try {
      out.push_back(response_from_json(j));
    } catch (const Error& e) {
      if (e.code() != Errc::SchemaViolation) throw;
      throw Error(Errc::SchemaViolation, e.detail(), with_line(line_no) + ": " + e.what());
    }
  }
  return sorted_responses(std::move(out));
}

void save_score_tables(const std::vector<ScoreTable>& tables, const std::filesystem::path& path) {
  std::vector<json> lines;
  for (const auto& t : tables) {
    validate(t);
    lines.push_back(to_json(t));
  }
  write_jsonl(lines, path);
}

std::vector<ScoreTable> load_score_tables(const std::filesystem::path& path) {
  std::vector<ScoreTable> out;
  for (const auto& [line_no, j] : read_jsonl(path)) {
    try {
      out.push_back(score_table_from_json(j));
    } catch (const Error& e) {
      if (e.code() != Errc::SchemaViolation) throw;
      throw Error(Errc::SchemaViolation, e.detail(), with_line(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  for (const auto& [line_no, j] : read_jsonl(path)) {
    try {
      out.push_back(annotation_from_json(j));
    } catch (const Error& e) {
      if (e.code() != Errc::SchemaViolation) throw;
      throw Error(Errc::SchemaViolation, e.detail(), with_line(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_annotations(const std::vector<AnnotationRecord>& records, const std::filesystem::path& path) {
  std::vector<json> lines;
  for (const auto& r : records) {
    validate(r);
    lines.push_back(to_json(r));
  }
  write_jsonl(lines, path);
}

std::string format_rfc3339(std::int64_t unix_millis) {
  const std::time_t secs = static_cast<std::time_t>(unix_millis >= 0 ? unix_millis / 1000 : (unix_millis - 999) / 1000);
  const auto millis = static_cast<int>(unix_millis - static_cast<std::int64_t>(secs) * 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

std::string now_rfc3339() {
  const auto now = std::chrono::system_clock::now();
  return format_rfc3339(std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count());
}

}  // namespace hqm
