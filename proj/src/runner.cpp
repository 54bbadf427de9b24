#include "hqm/runner.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include <spdlog/spdlog.h>

#include "hqm/concurrency.hpp"
#include "hqm/config.hpp"
#include "hqm/error.hpp"
#include "hqm/parallelforms.hpp"
#include "hqm/stats.hpp"
#include "hqm/text.hpp"

namespace hqm::runner {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

void RunManifest::validate() const {
  if (run_id.empty() || run_id.find('/') != std::string::npos) {
    throw Error(Errc::SchemaViolation, "run_id", "must be nonempty and contain no '/'");
  }
  if (benchmark.empty()) throw Error(Errc::SchemaViolation, "benchmark", "missing");
  if (models.empty()) throw Error(Errc::SchemaViolation, "models", "empty roster");
  std::set<std::string> seen;
  for (const auto& s : models) {
    if (!seen.insert(s.model_id).second) throw Error(Errc::SchemaViolation, "model_id", "duplicate " + s.model_id);
    if (s.kind == SourceKind::file && s.path.empty()) {
      throw Error(Errc::SchemaViolation, "path", s.model_id + ": file source without path");
    }
    if (s.kind == SourceKind::endpoint && s.endpoint_url.empty()) {
      throw Error(Errc::SchemaViolation, "endpoint_url", s.model_id + ": endpoint source without endpoint_url");
    }
  }
  if (concurrency == 0) throw Error(Errc::SchemaViolation, "concurrency", "must be >= 1");
  if (!(max_judge_failure_fraction >= 0.0 && max_judge_failure_fraction <= 1.0)) {
    throw Error(Errc::SchemaViolation, "max_judge_failure_fraction", "must be in [0, 1]");
  }
  // the judge is checked when a run actually needs one
}

RunManifest RunManifest::from_config(const Config& cfg) {
  RunManifest m;
  m.run_id = cfg.get_or("run", "run_id", m.run_id);
  m.benchmark = cfg.resolve_path(cfg.require("run", "benchmark"));
  m.workspace = cfg.resolve_path(cfg.get_or("run", "workspace", m.workspace.string()));
  m.seed = cfg.get_int("run", "seed", 0);
  if (cfg.get("run", "retest_seed")) m.retest_seed = cfg.get_int("run", "retest_seed", 0);
  m.subset_seed = static_cast<std::uint64_t>(cfg.get_int("run", "subset_seed", 0));
  const auto subset = cfg.get_int("run", "subset_size", 100);
  if (subset < 1) throw Error(Errc::Config, "subset_size", "must be >= 1");
  m.subset_size = static_cast<std::size_t>(subset);
  m.metric = cfg.get_or("run", "metric", "");
  if (const auto lex = cfg.get("run", "lexicon")) m.lexicon = cfg.resolve_path(*lex);
  m.parse_policy.mode = metrics::parse_mode(cfg.get_or("run", "parse_mode", "first_sentence_scan"));
  m.parse_policy.case_insensitive = cfg.get_bool("run", "case_insensitive", true);
  m.paraphraser = cfg.get_or("run", "paraphraser", m.paraphraser);
  if (m.paraphraser != "template" && m.paraphraser != "llm") {
    throw Error(Errc::Config, "paraphraser", "expected template or llm, got " + m.paraphraser);
  }
  const auto conc = cfg.get_int("run", "concurrency", 4);
  if (conc < 1) throw Error(Errc::Config, "concurrency", "must be >= 1");
  m.concurrency = static_cast<std::size_t>(conc);
  m.use_cache = cfg.get_bool("run", "cache", true);
  m.max_judge_failure_fraction = cfg.get_double("run", "max_judge_failure_fraction", 0.01);

  for (const auto& section : cfg.sections_with_prefix("model.")) {
    ModelSource s;
    s.model_id = section.substr(6);
    const auto kind = cfg.get_or(section, "source", "file");
    if (kind == "file") {
      s.kind = SourceKind::file;
      s.path = cfg.resolve_path(cfg.require(section, "path"));
      if (const auto p = cfg.get(section, "retest_path")) s.retest_path = cfg.resolve_path(*p);
      if (const auto p = cfg.get(section, "parallel_path")) s.parallel_path = cfg.resolve_path(*p);
    } else if (kind == "endpoint") {
      s.kind = SourceKind::endpoint;
      s.endpoint_url = cfg.require(section, "endpoint_url");
      s.model = cfg.get_or(section, "model", s.model_id);
      s.api_key_env = cfg.get_or(section, "api_key_env", "");
      s.temperature = cfg.get_double(section, "temperature", 0.0);
    } else {
      throw Error(Errc::Config, section + ".source", "expected file or endpoint, got " + kind);
    }
    m.models.push_back(std::move(s));
  }
  if (cfg.has_section("judge")) m.judge = judge_config_from(cfg, "judge");
  if (const auto p = cfg.get("annotations", "content")) m.content_annotations = cfg.resolve_path(*p);
  if (const auto p = cfg.get("annotations", "criterion")) m.criterion_annotations = cfg.resolve_path(*p);
  m.validate();
  return m;
}

RunManifest RunManifest::load(const fs::path& path) { return from_config(Config::load(path)); }

json to_json(const RunManifest& m) {
  json models = json::array();
  for (const auto& s : m.models) {
    json j{{"model_id", s.model_id}, {"source", s.kind == SourceKind::file ? "file" : "endpoint"}};
    if (s.kind == SourceKind::file) {
      j["path"] = s.path.string();
      j["retest_path"] = s.retest_path.string();
      j["parallel_path"] = s.parallel_path.string();
    } else {
      j["endpoint_url"] = s.endpoint_url;
      j["model"] = s.model;
      j["api_key_env"] = s.api_key_env;
      j["temperature"] = s.temperature;
    }
    models.push_back(j);
  }
  const auto& jc = m.judge;
  return {
      {"run_id", m.run_id},
      {"benchmark", m.benchmark.string()},
      {"workspace", m.workspace.string()},
      {"seed", m.seed},
      {"retest_seed", m.effective_retest_seed()},
      {"subset_seed", m.subset_seed},
      {"subset_size", m.subset_size},
      {"metric", m.metric},
      {"lexicon", m.lexicon.string()},
      {"parse_mode", metrics::to_string(m.parse_policy.mode)},
      {"case_insensitive", m.parse_policy.case_insensitive},
      {"paraphraser", m.paraphraser},
      {"concurrency", m.concurrency},
      {"cache", m.use_cache},
      {"max_judge_failure_fraction", m.max_judge_failure_fraction},
      {"models", models},
      {"judge",
       {{"backend", jc.backend},
        {"endpoint_url", jc.endpoint_url},
        {"model", jc.model},
        {"api_key_env", jc.api_key_env},
        {"temperature", jc.temperature},
        {"request_seed", jc.request_seed ? json(*jc.request_seed) : json(nullptr)},
        {"max_retries", jc.max_retries},
        {"max_concurrency", jc.max_concurrency}}},
      {"annotations",
       {{"content", m.content_annotations ? json(m.content_annotations->string()) : json(nullptr)},
        {"criterion", m.criterion_annotations ? json(m.criterion_annotations->string()) : json(nullptr)}}},
      {"prompt_templates", prompt_template_hashes()},
  };
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

std::string cache_key(const CacheKeyFields& f) {
  std::string buf;
  const auto field = [&](std::string_view v) {
    buf += std::to_string(v.size());
    buf += ':';
    buf += v;
  };
  field(f.benchmark_id);
  field(f.sample_id);
  field(f.model_id);
  field(std::to_string(f.seed));
  field(f.instruction);
  return text::sha256_hex(buf);
}

namespace {

json fields_json(const CacheKeyFields& f) {
  return {{"benchmark_id", f.benchmark_id}, {"sample_id", f.sample_id}, {"model_id", f.model_id},
          {"seed", f.seed},                 {"instruction", f.instruction}};
}

CacheKeyFields fields_from(const json& j) {
  return {j.at("benchmark_id").get<std::string>(), j.at("sample_id").get<std::string>(),
          j.at("model_id").get<std::string>(), j.at("seed").get<std::int64_t>(), j.at("instruction").get<std::string>()};
}

}  // namespace

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

ResponseCache::Segment& ResponseCache::segment(const std::string& prefix) {
  auto it = segments_.find(prefix);
  if (it != segments_.end()) return it->second;
  Segment seg;
  const auto path = dir_ / (prefix + ".jsonl");
  if (fs::exists(path)) {
    for (const auto& [line_no, j] : read_jsonl(path)) {
      try {
        seg[j.at("key").get<std::string>()] = Entry{fields_from(j.at("fields")), response_from_json(j.at("response"))};
      } catch (const std::exception& e) {
        spdlog::warn("cache segment {} line {} ignored: {}", path.string(), line_no, e.what());
      }
    }
  }
  return segments_.emplace(prefix, std::move(seg)).first->second;
}

void ResponseCache::flush(const std::string& prefix, const Segment& seg) const {
  std::vector<json> lines;
  lines.reserve(seg.size());
  for (const auto& [key, e] : seg) {
    lines.push_back({{"key", key}, {"fields", fields_json(e.fields)}, {"response", to_json(e.response)}});
  }
  fs::create_directories(dir_);
  write_jsonl(lines, dir_ / (prefix + ".jsonl"));
}

std::optional<ModelResponse> ResponseCache::get(const CacheKeyFields& f) {
  const auto key = cache_key(f);
  std::lock_guard lock(mu_);
  const auto& seg = segment(key.substr(0, 2));
  const auto it = seg.find(key);
  if (it == seg.end() || !(it->second.fields == f)) return std::nullopt;
  const auto& r = it->second.response;
  if (r.sample_id != f.sample_id || r.model_id != f.model_id || r.seed != f.seed) return std::nullopt;
  return r;
}

void ResponseCache::put(const CacheKeyFields& f, const ModelResponse& r) {
  const auto key = cache_key(f);
  const auto prefix = key.substr(0, 2);
  std::lock_guard lock(mu_);
  auto& seg = segment(prefix);
  seg[key] = Entry{f, r};
  flush(prefix, seg);
}

// ---------------------------------------------------------------------------
// Collection
// ---------------------------------------------------------------------------

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::original:
      return "original";
    case Variant::retest:
      return "retest";
    case Variant::parallel:
      return "parallel";
  }
  return "?";
}

std::string variant_run_id(const RunManifest& m, Variant v) { return m.run_id + "/" + std::string(to_string(v)); }

BackendFactory default_backend_factory(const RunManifest& m) {
  const auto retries = m.judge.max_retries;
  const auto conc = static_cast<int>(m.concurrency);
  return [retries, conc](const ModelSource& s) -> std::shared_ptr<ChatBackend> {
    JudgeConfig c;
    c.backend = "http";
    c.endpoint_url = s.endpoint_url;
    c.model = s.model;
    c.api_key_env = s.api_key_env;
    c.temperature = s.temperature;
    c.max_retries = retries;
    c.max_concurrency = conc;
    return std::make_shared<HttpChatClient>(c);
  };
}

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) out += (i ? "," : "") + ids[i];
  if (ids.size() > limit) out += ",... (" + std::to_string(ids.size()) + " total)";
  return out;
}

void collect_file(const ModelSource& src, const fs::path& path, const BenchmarkSpec& spec, const std::string& run_id,
                  CollectResult& out) {
  std::vector<ModelResponse> rows;
  try {
    rows = load_responses(path);
  } catch (const Error& e) {
    throw Error(Errc::SourceUnavailable, src.model_id, path.string() + ": " + e.what());
  }
  std::set<std::string> wanted;
  for (const auto& s : spec.samples) wanted.insert(s.sample_id);
  std::map<std::string, ModelResponse> by_sample;
  std::vector<std::string> unexpected, duplicate, foreign;
  for (auto& r : rows) {
    ++out.stats.file_rows;
    if (r.model_id != src.model_id) {
      foreign.push_back(r.model_id + ":" + r.sample_id);
      continue;
    }
    if (!wanted.count(r.sample_id)) {
      unexpected.push_back(r.sample_id);
      continue;
    }
    r.run_id = run_id;
    if (!by_sample.emplace(r.sample_id, r).second) duplicate.push_back(r.sample_id);
  }
  std::vector<std::string> missing;
  for (const auto& s : spec.samples) {
    if (!by_sample.count(s.sample_id)) missing.push_back(s.sample_id);
  }
  const auto gap = [&](const char* what, const std::vector<std::string>& ids) {
    if (ids.empty()) return;
    out.coverage_gaps.push_back(src.model_id + ": " + std::to_string(ids.size()) + " " + what + " [" + join_ids(ids) + "]");
    out.incomplete_models.insert(src.model_id);
  };
  gap("missing samples", missing);
  gap("unexpected samples", unexpected);
  gap("duplicate samples", duplicate);
  gap("rows for other models", foreign);
  for (auto& [_, r] : by_sample) out.responses.push_back(std::move(r));
}

void collect_endpoint(const RunManifest& m, const ModelSource& src, const BenchmarkSpec& spec, std::int64_t seed,
                      const std::string& run_id, const BackendFactory& factory, ResponseCache* cache,
                      CollectResult& out) {
  const auto n = spec.samples.size();
  std::vector<std::optional<ModelResponse>> got(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> hits{0}, misses{0}, calls{0};
  std::shared_ptr<ChatBackend> backend;
  std::mutex backend_mu;
  const auto get_backend = [&] {
    std::lock_guard lock(backend_mu);
    if (!backend) backend = factory(src);
    return backend;
  };

  parallel_for(n, m.concurrency, [&](std::size_t i) {
    const auto& s = spec.samples[i];
    const auto prompt = render_prompt(s);
    const CacheKeyFields key{spec.benchmark_id, s.sample_id, src.model_id, seed, prompt};
    if (cache) {
      if (auto hit = cache->get(key)) {
        ++hits;
        hit->run_id = run_id;
        got[i] = std::move(*hit);
        return;
      }
      ++misses;
    }
    ChatRequest req;
    req.messages.push_back({"user", prompt, s.image_ref});
    req.temperature = src.temperature;
    req.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    std::string reply;
    try {
      ++calls;
      reply = get_backend()->complete(req);
    } catch (const Error& e) {
      if (e.code() == Errc::AuthFailure) throw Error(Errc::SourceUnavailable, src.model_id, e.what());
      errors[i] = e.what();
      return;
    }
    ModelResponse r;
    r.sample_id = s.sample_id;
    r.model_id = src.model_id;
    r.run_id = run_id;
    r.seed = seed;
    r.text = reply;
    r.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    r.created_at = format_rfc3339(now_ms());
    if (cache) cache->put(key, r);
    got[i] = std::move(r);
  });

  out.stats.cache_hits += hits;
  out.stats.cache_misses += misses;
  out.stats.network_calls += calls;
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < n; ++i) {
    if (got[i]) {
      out.responses.push_back(std::move(*got[i]));
    } else {
      failed.push_back(spec.samples[i].sample_id);
      spdlog::warn("{} {}: {}", src.model_id, spec.samples[i].sample_id, errors[i]);
    }
  }
  if (n > 0 && failed.size() == n) {
    throw Error(Errc::SourceUnavailable, src.model_id, "every request failed; last error: " + errors.back());
  }
  if (!failed.empty()) {
    out.coverage_gaps.push_back(src.model_id + ": " + std::to_string(failed.size()) + " failed requests [" +
                                join_ids(failed) + "]");
    out.incomplete_models.insert(src.model_id);
  }
}

}  // namespace

CollectResult collect_responses(const RunManifest& m, const BenchmarkSpec& spec, std::int64_t seed, Variant variant,
                                const BackendFactory& factory) {
  CollectResult out;
  const auto run_id = variant_run_id(m, variant);
  std::unique_ptr<ResponseCache> cache;
  if (m.use_cache) cache = std::make_unique<ResponseCache>(m.workspace / "cache");
  for (const auto& src : m.models) {
    if (src.kind == SourceKind::file) {
      const auto& path = variant == Variant::original ? src.path
                         : variant == Variant::retest ? src.retest_path
                                                      : src.parallel_path;
      if (path.empty()) {
        throw Error(Errc::SourceUnavailable, src.model_id,
                    "no " + std::string(to_string(variant)) + " response file configured");
      }
      collect_file(src, path, spec, run_id, out);
    } else {
      collect_endpoint(m, src, spec, seed, run_id, factory ? factory : default_backend_factory(m), cache.get(), out);
    }
  }
  out.responses = sorted_responses(std::move(out.responses));
  return out;
}

// ---------------------------------------------------------------------------
// HQH
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kHqhMetrics[] = {"main_hal_pct", "extra_num_hal", "overall_hal_pct"};

double pick(const metrics::HqhAggregate& a, std::string_view metric) {
  if (metric == "main_hal_pct") return a.main_hal_pct;
  if (metric == "extra_num_hal") return a.extra_num_hal;
  return a.overall_hal_pct;
}

bool is_judge_failure(Errc c) {
  switch (c) {
    case Errc::Transport:
    case Errc::RateLimited:
    case Errc::Timeout:
    case Errc::JudgeMalformedOutput:
    case Errc::ScoreOutOfRange:
      return true;
    default:
      return false;
  }
}

}  // namespace

HqhRun run_hqh_eval(const RunManifest& m, const BenchmarkSpec& spec, const std::vector<ModelResponse>& responses,
                    const Judge& judge, const std::string& run_id) {
  std::map<std::string, const Sample*> samples;
  for (const auto& s : spec.samples) {
    if (!s.image_facts || text::trim(*s.image_facts).empty()) {
      throw Error(Errc::MissingImageFacts, s.sample_id, "HQH evaluation needs image facts for every sample");
    }
    samples[s.sample_id] = &s;
  }

  HqhRun out;
  std::vector<const ModelResponse*> work;
  for (const auto& r : responses) {
    if (samples.count(r.sample_id)) {
      work.push_back(&r);
    } else {
      out.notes.push_back(r.model_id + ": response for unknown sample " + r.sample_id + " ignored");
    }
  }
  std::vector<std::optional<JudgeVerdict>> verdicts(work.size());
  std::vector<std::string> errors(work.size());
  parallel_for(work.size(), m.concurrency, [&](std::size_t i) {
    try {
      verdicts[i] = judge.verdict(*samples.at(work[i]->sample_id), *work[i]);
    } catch (const Error& e) {
      if (!is_judge_failure(e.code())) throw;
      errors[i] = e.what();
    }
  });

  std::map<std::string, std::vector<JudgeVerdict>> per_model;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (verdicts[i]) {
      per_model[work[i]->model_id].push_back(*verdicts[i]);
      out.verdicts.push_back(std::move(*verdicts[i]));
    } else {
      ++out.judge_failures;
      out.notes.push_back("judge failure excluded: " + work[i]->model_id + "/" + work[i]->sample_id + ": " + errors[i]);
    }
  }
  if (!work.empty()) {
    const double frac = static_cast<double>(out.judge_failures) / static_cast<double>(work.size());
    if (frac > m.max_judge_failure_fraction) {
      throw Error(Errc::JudgeAbort, std::to_string(out.judge_failures) + "/" + std::to_string(work.size()),
                  "judge failure fraction above threshold");
    }
  }
  std::sort(out.verdicts.begin(), out.verdicts.end(), [](const JudgeVerdict& a, const JudgeVerdict& b) {
    return std::tie(a.model_id, a.sample_id) < std::tie(b.model_id, b.sample_id);
  });

  for (const auto metric : kHqhMetrics) {
    ScoreTable t;
    t.benchmark_id = spec.benchmark_id;
    t.run_id = run_id;
    t.metric_name = metric;
    t.orientation = Orientation::lower_better;
    t.per_dimension.emplace();
    out.tables.push_back(std::move(t));
  }
  for (const auto& [model, vs] : per_model) {
    std::set<std::string> covered;
    for (const auto& v : vs) covered.insert(v.sample_id);
    std::vector<Sample> subset;
    for (const auto& s : spec.samples) {
      if (covered.count(s.sample_id)) subset.push_back(s);
    }
    if (subset.size() != spec.samples.size()) {
      out.notes.push_back(model + ": aggregated over " + std::to_string(subset.size()) + " of " +
                          std::to_string(spec.samples.size()) + " samples");
    }
    auto res = metrics::hqh_metrics(vs, subset);
    for (auto& t : out.tables) {
      t.scores[model] = pick(res.overall, t.metric_name);
      for (const auto& [dim, agg] : res.per_dimension) (*t.per_dimension)[std::string(to_string(dim))][model] = pick(agg, t.metric_name);
      for (const auto& [lvl, agg] : res.per_level) (*t.per_dimension)[std::string(to_string(lvl))][model] = pick(agg, t.metric_name);
    }
    out.per_model.emplace(model, std::move(res));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

ScoredRun score_run(const RunManifest& m, const BenchmarkSpec& spec, const std::vector<ModelResponse>& responses,
                    const Judge* judge, const std::string& run_id, const std::set<std::string>& skip) {
  ScoredRun out;
  out.table.benchmark_id = spec.benchmark_id;
  out.table.run_id = run_id;

  std::map<std::string, std::vector<ModelResponse>> by_model;
  for (const auto& r : responses) {
    if (!skip.count(r.model_id)) by_model[r.model_id].push_back(r);
  }
  for (const auto& model : skip) out.notes.push_back(model + ": excluded from " + run_id + " (incomplete coverage)");

  switch (spec.task_type) {
    case TaskType::yes_no:
    case TaskType::mcq: {
      out.table.metric_name = "accuracy";
      out.table.orientation = Orientation::higher_better;
      for (const auto& [model, rs] : by_model) {
        auto& d = out.diagnostics[model];
        d.avg_length = metrics::avg_response_length(rs);
        if (spec.task_type == TaskType::yes_no) {
          const auto acc = metrics::accuracy_yes_no(spec.samples, rs, m.parse_policy, judge);
          out.table.scores[model] = acc.acc;
          d.yes_ratio = acc.yes_ratio;
          d.unparsed = acc.unparsed;
        } else {
          const auto acc = metrics::accuracy_mcq(spec.samples, rs, m.parse_policy, judge);
          out.table.scores[model] = acc.acc;
          d.unparsed = acc.unparsed;
        }
      }
      break;
    }
    case TaskType::captioning: {
      if (m.lexicon.empty()) throw Error(Errc::Config, "lexicon", "captioning benchmarks need [run] lexicon");
      const auto lexicon = metrics::ObjectLexicon::load(m.lexicon);
      out.table.metric_name = "chair";
      out.table.orientation = Orientation::lower_better;
      for (const auto& [model, rs] : by_model) {
        std::map<std::string, std::string> captions;
        for (const auto& r : rs) captions[r.sample_id] = r.text;
        out.table.scores[model] = metrics::chair(captions, spec.samples, lexicon).chair;
        out.diagnostics[model].avg_length = metrics::avg_response_length(rs);
      }
      break;
    }
    case TaskType::free_form: {
      if (judge == nullptr) throw Error(Errc::InvalidArgument, "judge", "free-form scoring needs a judge");
      const std::string metric = m.metric.empty() ? "overall_hal_pct" : m.metric;
      if (std::find(std::begin(kHqhMetrics), std::end(kHqhMetrics), metric) == std::end(kHqhMetrics)) {
        throw Error(Errc::Config, "metric", "free-form metric must be main_hal_pct, extra_num_hal or overall_hal_pct");
      }
      std::vector<ModelResponse> kept;
      for (const auto& [_, rs] : by_model) kept.insert(kept.end(), rs.begin(), rs.end());
      auto hqh = run_hqh_eval(m, spec, kept, *judge, run_id);
      for (auto& t : hqh.tables) {
        if (t.metric_name == metric) out.table = std::move(t);
      }
      for (const auto& [model, rs] : by_model) out.diagnostics[model].avg_length = metrics::avg_response_length(rs);
      out.notes.insert(out.notes.end(), hqh.notes.begin(), hqh.notes.end());
      break;
    }
  }
  if (!m.metric.empty() && spec.task_type != TaskType::free_form && m.metric != out.table.metric_name) {
    throw Error(Errc::Config, "metric", m.metric + " does not apply to " + std::string(to_string(spec.task_type)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quality suite
// ---------------------------------------------------------------------------

namespace {

template <typename T>
quality::Indicator<T> available(T v) {
  return {std::variant<T, std::string>(std::in_place_index<0>, std::move(v))};
}

bool needs_judge(const RunManifest& m, const BenchmarkSpec& spec) {
  return spec.task_type == TaskType::free_form || m.parse_policy.mode == metrics::ParseMode::judge_fallback ||
         m.paraphraser == "llm";
}

std::string first_missing_source(const RunManifest& m, Variant v) {
  for (const auto& s : m.models) {
    if (s.kind != SourceKind::file) continue;
    if ((v == Variant::retest ? s.retest_path : s.parallel_path).empty()) return s.model_id;
  }
  return {};
}

void guard_run_id(const RunManifest& m, const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  const auto current = to_json(m).dump(2) + "\n";
  if (fs::exists(manifest_path) && read_text(manifest_path) != current) {
    throw Error(Errc::InvalidArgument, m.run_id,
                "run_id already used in this workspace with a different manifest (" + manifest_path.string() + ")");
  }
  fs::create_directories(dir);
  write_text_atomic(current, manifest_path);
}

}  // namespace

std::string serialize_report(const quality::QualityReport& r) { return quality::to_json(r).dump(2) + "\n"; }

quality::QualityReport run_quality_suite(const RunManifest& m, const SuiteOptions& options) {
  m.validate();
  if (m.models.size() < 2) throw Error(Errc::InvalidArgument, "models", "the quality suite needs at least 2 models");
  const auto spec = load_benchmark(m.benchmark);
  const auto run_dir = m.workspace / "runs" / m.run_id;
  if (options.write_artifacts) guard_run_id(m, run_dir);

  std::shared_ptr<const Judge> judge;
  if (needs_judge(m, spec)) {
    if (!options.judge_backend) m.judge.validate();
    judge = std::make_shared<const Judge>(m.judge, options.judge_backend ? options.judge_backend : make_backend(m.judge));
  }
  const auto factory = options.backend_factory ? options.backend_factory : default_backend_factory(m);

  quality::QualityReport rep;
  rep.benchmark_id = spec.benchmark_id;
  rep.subset_seed = m.subset_seed;
  for (const auto& s : m.models) rep.model_roster.push_back(s.model_id);
  std::sort(rep.model_roster.begin(), rep.model_roster.end());

  // original
  auto original = collect_responses(m, spec, m.seed, Variant::original, factory);
  for (const auto& g : original.coverage_gaps) rep.notes.push_back("original coverage gap: " + g);
  auto scored = score_run(m, spec, original.responses, judge.get(), variant_run_id(m, Variant::original),
                          original.incomplete_models);
  rep.metric_name = scored.table.metric_name;
  rep.orientation = scored.table.orientation;
  rep.diagnostics = scored.diagnostics;
  rep.notes.insert(rep.notes.end(), scored.notes.begin(), scored.notes.end());
  rep.score_tables["original"] = scored.table;
  if (options.write_artifacts) save_responses(original.responses, run_dir / "responses.original.jsonl");

  // retest
  if (const auto missing = first_missing_source(m, Variant::retest); !missing.empty()) {
    rep.test_retest = quality::Indicator<quality::CorrelationResult>::unavailable("no retest responses for " + missing);
  } else {
    try {
      auto retest = collect_responses(m, spec, m.effective_retest_seed(), Variant::retest, factory);
      for (const auto& g : retest.coverage_gaps) rep.notes.push_back("retest coverage gap: " + g);
      auto rs = score_run(m, spec, retest.responses, judge.get(), variant_run_id(m, Variant::retest),
                          retest.incomplete_models);
      rep.notes.insert(rep.notes.end(), rs.notes.begin(), rs.notes.end());
      rep.score_tables["retest"] = rs.table;
      if (options.write_artifacts) save_responses(retest.responses, run_dir / "responses.retest.jsonl");
      rep.test_retest = available(quality::test_retest(scored.table, rs.table));
      rep.retest_rank_delta = quality::leaderboard_delta(scored.table, rs.table);
    } catch (const Error& e) {
      rep.test_retest = quality::Indicator<quality::CorrelationResult>::unavailable(e.what());
    }
  }

  // parallel form
  if (const auto missing = first_missing_source(m, Variant::parallel); !missing.empty()) {
    rep.parallel_forms = quality::Indicator<quality::CorrelationResult>::unavailable("no parallel-form responses for " + missing);
  } else {
    try {
      std::unique_ptr<Paraphraser> para;
      if (m.paraphraser == "llm") {
        para = std::make_unique<LlmParaphraser>(judge);
      } else {
        para = std::make_unique<TemplateParaphraser>();
      }
      auto [pspec, plog] = build_parallel_benchmark(spec, static_cast<std::uint64_t>(m.seed), *para,
                                                    ParallelBuildOptions{m.concurrency, 0.01});
      std::size_t failed = 0;
      for (const auto& e : plog.entries) failed += e.transform_kind == TransformKind::failed;
      if (failed) rep.notes.push_back("parallel form: " + std::to_string(failed) + " samples failed to transform and were omitted");
      if (options.write_artifacts) {
        save_benchmark(pspec, run_dir / "parallel_benchmark.jsonl");
        save_transform_log(plog, run_dir / "transform_log.jsonl");
      }
      auto par = collect_responses(m, pspec, m.seed, Variant::parallel, factory);
      for (const auto& g : par.coverage_gaps) rep.notes.push_back("parallel coverage gap: " + g);
      auto ps = score_run(m, pspec, par.responses, judge.get(), variant_run_id(m, Variant::parallel),
                          par.incomplete_models);
      rep.notes.insert(rep.notes.end(), ps.notes.begin(), ps.notes.end());
      for (const auto& [model, d] : ps.diagnostics) {
        auto& dst = rep.diagnostics[model];
        dst.yes_ratio_parallel = d.yes_ratio;
        dst.avg_length_parallel = d.avg_length;
        dst.unparsed_parallel = d.unparsed;
      }
      rep.score_tables["parallel"] = ps.table;
      if (options.write_artifacts) save_responses(par.responses, run_dir / "responses.parallel.jsonl");
      rep.parallel_forms = available(quality::parallel_forms(scored.table, ps.table));
      rep.parallel_rank_delta = quality::leaderboard_delta(scored.table, ps.table);
    } catch (const Error& e) {
      rep.parallel_forms = quality::Indicator<quality::CorrelationResult>::unavailable(e.what());
    }
  }

  // validity subset
  std::vector<std::string> ids;
  for (const auto& s : spec.samples) ids.push_back(s.sample_id);
  rep.subset_size = std::min(m.subset_size, ids.size());
  if (rep.subset_size < m.subset_size) {
    rep.notes.push_back("validity subset clipped to " + std::to_string(rep.subset_size) + " samples");
  }
  const auto subset = stats::sample_subset(ids, rep.subset_size, m.subset_seed);

  if (!m.content_annotations) {
    rep.content_validity = quality::Indicator<quality::ContentValidity>::unavailable("no annotations");
  } else if (!fs::exists(*m.content_annotations)) {
    rep.content_validity = quality::Indicator<quality::ContentValidity>::unavailable(
        "no annotations (" + m.content_annotations->filename().string() + " not found)");
  } else {
    try {
      rep.content_validity = available(quality::content_validity(load_annotations(*m.content_annotations), subset));
    } catch (const Error& e) {
      rep.content_validity = quality::Indicator<quality::ContentValidity>::unavailable(e.what());
    }
  }

  if (!m.criterion_annotations) {
    rep.criterion_validity = quality::Indicator<quality::CorrelationResult>::unavailable("no annotations");
  } else if (!fs::exists(*m.criterion_annotations)) {
    rep.criterion_validity = quality::Indicator<quality::CorrelationResult>::unavailable(
        "no annotations (" + m.criterion_annotations->filename().string() + " not found)");
  } else {
    try {
      const std::set<std::string> in_subset(subset.begin(), subset.end());
      std::vector<ModelResponse> sampled;
      for (const auto& r : original.responses) {
        if (in_subset.count(r.sample_id) && scored.table.scores.count(r.model_id)) sampled.push_back(r);
      }
      auto human = quality::human_scores_from_annotations(load_annotations(*m.criterion_annotations), sampled,
                                                          scored.table.orientation, spec.benchmark_id,
                                                          m.run_id + "/human");
      rep.criterion_orientation = std::string(to_string(human.orientation));
      rep.score_tables["human"] = human;
      rep.criterion_validity = available(quality::criterion_validity(scored.table, human));
    } catch (const Error& e) {
      rep.criterion_validity = quality::Indicator<quality::CorrelationResult>::unavailable(e.what());
    }
  }

  rep.provenance["seed"] = std::to_string(m.seed);
  rep.provenance["retest_seed"] = std::to_string(m.effective_retest_seed());
  rep.provenance["subset_seed"] = std::to_string(m.subset_seed);
  rep.provenance["paraphraser"] = m.paraphraser;
  rep.provenance["parse_mode"] = std::string(metrics::to_string(m.parse_policy.mode));
  rep.provenance["benchmark_sha256"] = text::sha256_hex(serialize_benchmark(spec));
  if (judge) {
    rep.provenance["judge_backend"] = m.judge.backend;
    rep.provenance["judge_model"] = m.judge.model;
    for (const auto& [name, hash] : prompt_template_hashes()) rep.provenance["template." + name] = hash;
  }

  if (options.write_artifacts) {
    std::vector<ScoreTable> tables;
    for (const auto& [_, t] : rep.score_tables) tables.push_back(t);
    save_score_tables(tables, run_dir / "scores.jsonl");
    write_text_atomic(serialize_report(rep), run_dir / "quality_report.json");
    write_text_atomic(quality::render_markdown(rep), run_dir / "quality_report.md");
  }
  return rep;
}

}  // namespace hqm::runner
