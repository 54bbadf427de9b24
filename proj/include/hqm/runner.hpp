#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hqm/datamodel.hpp"
#include "hqm/judge.hpp"
#include "hqm/metrics.hpp"
#include "hqm/quality.hpp"

namespace hqm {
class Config;
}

namespace hqm::runner {

enum class SourceKind { file, endpoint };

struct ModelSource {
  std::string model_id;
  SourceKind kind = SourceKind::file;
  // file sources: one response file per run variant
  std::filesystem::path path;
  std::filesystem::path retest_path;
  std::filesystem::path parallel_path;
  // endpoint sources: OpenAI-compatible chat completions
  std::string endpoint_url;
  std::string model;
  std::string api_key_env;
  double temperature = 0.0;
};

/// Loaded from a key-value manifest:
///
///   [run]         run_id, benchmark, workspace, seed, retest_seed,
///                 subset_seed, subset_size, metric, lexicon, parse_mode,
///                 paraphraser (template|llm), concurrency, cache (on|off),
///                 max_judge_failure_fraction
///   [model.<id>]  source = file|endpoint; path, retest_path, parallel_path
///                 or endpoint_url, model, api_key_env, temperature
///   [judge]       see judge_config_from
///   [annotations] content, criterion (JSONL annotation logs)
///
/// Relative paths resolve against the manifest's directory.
struct RunManifest {
  std::string run_id = "run";
  std::filesystem::path benchmark;
  std::filesystem::path workspace = "workspace";
  std::int64_t seed = 0;
  std::optional<std::int64_t> retest_seed;  // default seed + 1
  std::uint64_t subset_seed = 0;
  std::size_t subset_size = 100;
  std::string metric;  // empty: accuracy / chair / overall_hal_pct by task type
  std::filesystem::path lexicon;
  metrics::ParsePolicy parse_policy;
  std::string paraphraser = "template";
  std::size_t concurrency = 4;
  bool use_cache = true;
  double max_judge_failure_fraction = 0.01;
  std::vector<ModelSource> models;
  JudgeConfig judge;
  std::optional<std::filesystem::path> content_annotations;
  std::optional<std::filesystem::path> criterion_annotations;

  std::int64_t effective_retest_seed() const { return retest_seed.value_or(seed + 1); }
  /// SchemaViolation on an empty roster, duplicate model ids, or a source
  /// without its location.
  void validate() const;

  static RunManifest from_config(const Config& cfg);
  static RunManifest load(const std::filesystem::path& path);
};

/// Every manifest parameter plus the prompt-template hashes.
json to_json(const RunManifest& m);

// ---------------------------------------------------------------------------
// Response cache
// ---------------------------------------------------------------------------

struct CacheKeyFields {
  std::string benchmark_id;
  std::string sample_id;
  std::string model_id;
  std::int64_t seed = 0;
  std::string instruction;

  bool operator==(const CacheKeyFields&) const = default;
};

/// SHA-256 hex over the length-prefixed fields.
std::string cache_key(const CacheKeyFields& f);

/// Content-addressed JSONL segments under <dir>/<first two hex>.jsonl. Each
/// segment is rewritten atomically on insert; a hit whose stored fields
/// differ from the request is treated as a miss.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<ModelResponse> get(const CacheKeyFields& f);
  void put(const CacheKeyFields& f, const ModelResponse& r);

 private:
  struct Entry {
    CacheKeyFields fields;
    ModelResponse response;
  };
  using Segment = std::map<std::string, Entry>;
  Segment& segment(const std::string& prefix);  // mu_ held
  void flush(const std::string& prefix, const Segment& seg) const;

  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, Segment> segments_;
};

// ---------------------------------------------------------------------------
// Collection
// ---------------------------------------------------------------------------

enum class Variant { original, retest, parallel };
std::string_view to_string(Variant v) noexcept;

/// Builds the chat backend for an endpoint source. Tests inject fakes.
using BackendFactory = std::function<std::shared_ptr<ChatBackend>(const ModelSource&)>;
BackendFactory default_backend_factory(const RunManifest& m);

struct CollectStats {
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t network_calls = 0;
  std::size_t file_rows = 0;
};

struct CollectResult {
  std::vector<ModelResponse> responses;  // sorted by (model, sample, run)
  CollectStats stats;
  std::vector<std::string> coverage_gaps;  // "<model>: ..." lines
  std::set<std::string> incomplete_models;
};

/// One response per (sample, model). File sources read the variant's file;
/// endpoint sources query with `seed` and the source temperature, through
/// the cache. SourceUnavailable when a file is missing or unreadable, or
/// every request of an endpoint fails.
CollectResult collect_responses(const RunManifest& m, const BenchmarkSpec& spec, std::int64_t seed, Variant variant,
                                const BackendFactory& factory);

/// "<run_id>/<variant>", stamped on every collected response.
std::string variant_run_id(const RunManifest& m, Variant v);

// ---------------------------------------------------------------------------
// HQH evaluation
// ---------------------------------------------------------------------------

struct HqhRun {
  std::vector<JudgeVerdict> verdicts;  // sorted by (model, sample)
  std::map<std::string, metrics::HqhResult> per_model;
  std::vector<ScoreTable> tables;  // main_hal_pct, extra_num_hal, overall_hal_pct
  std::size_t judge_failures = 0;
  std::vector<std::string> notes;
};

/// Judges every response (main match, then extra claims) and aggregates per
/// model. MissingImageFacts before any judge call when a sample lacks facts;
/// JudgeAbort when failures exceed max_judge_failure_fraction. Failed
/// responses are excluded and counted.
HqhRun run_hqh_eval(const RunManifest& m, const BenchmarkSpec& spec, const std::vector<ModelResponse>& responses,
                    const Judge& judge, const std::string& run_id);

// ---------------------------------------------------------------------------
// Scoring and the quality suite
// ---------------------------------------------------------------------------

struct ScoredRun {
  ScoreTable table;
  std::map<std::string, quality::ModelDiagnostics> diagnostics;  // original-side fields only
  std::vector<std::string> notes;
};

/// Metric per task type: yes/no and mcq -> accuracy (higher_better),
/// captioning -> chair, free-form -> the manifest metric or overall_hal_pct
/// (lower_better). Models listed in `skip` are left out of the table.
ScoredRun score_run(const RunManifest& m, const BenchmarkSpec& spec, const std::vector<ModelResponse>& responses,
                    const Judge* judge, const std::string& run_id, const std::set<std::string>& skip = {});

struct SuiteOptions {
  BackendFactory backend_factory;  // default_backend_factory when empty
  std::shared_ptr<ChatBackend> judge_backend;  // overrides the manifest judge backend
  bool write_artifacts = true;
};

/// Original run, retest run, parallel-form run, and both validity
/// indicators. Missing inputs mark indicators "unavailable: <reason>".
/// Artifacts go to <workspace>/runs/<run_id>/.
quality::QualityReport run_quality_suite(const RunManifest& m, const SuiteOptions& options = {});

/// Canonical serialization used for the byte-identity check.
std::string serialize_report(const quality::QualityReport& r);

}  // namespace hqm::runner
