#include "hqm/judge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "hqm/config.hpp"
#include "hqm/error.hpp"
#include "hqm/resources.hpp"
#include "hqm/rewrite.hpp"
#include "hqm/text.hpp"

namespace hqm {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void JudgeConfig::validate() const {
  if (max_concurrency < 1) throw Error(Errc::InvalidArgument, "max_concurrency", "must be >= 1");
  if (!(temperature >= 0.0)) throw Error(Errc::InvalidArgument, "temperature", "must be >= 0");
  if (max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries", "must be >= 0");
  if (timeout_s <= 0.0) throw Error(Errc::InvalidArgument, "timeout_s", "must be > 0");
  if (backend != "mock" && backend != "http") throw Error(Errc::InvalidArgument, "backend", backend);
  if (backend == "http" && endpoint_url.empty()) throw Error(Errc::InvalidArgument, "endpoint_url", "empty");
}

JudgeConfig judge_config_from(const Config& cfg, const std::string& section) {
  JudgeConfig c;
  c.backend = cfg.get_or(section, "backend", c.backend);
  c.endpoint_url = cfg.get_or(section, "endpoint_url", "");
  c.model = cfg.get_or(section, "model", "");
  c.api_key_env = cfg.get_or(section, "api_key_env", "");
  c.temperature = cfg.get_double(section, "temperature", c.temperature);
  if (const auto seed = cfg.get(section, "request_seed")) {
    if (text::to_lower(*seed) == "none") {
      c.request_seed.reset();
    } else {
      c.request_seed = cfg.get_int(section, "request_seed", 0);
    }
  }
  c.max_retries = static_cast<int>(cfg.get_int(section, "max_retries", c.max_retries));
  c.max_concurrency = static_cast<int>(cfg.get_int(section, "max_concurrency", c.max_concurrency));
  c.timeout_s = cfg.get_double(section, "timeout_s", c.timeout_s);
  c.backoff_initial_s = cfg.get_double(section, "backoff_initial_s", c.backoff_initial_s);
  c.backoff_max_s = cfg.get_double(section, "backoff_max_s", c.backoff_max_s);
  c.requests_per_second = cfg.get_double(section, "requests_per_second", c.requests_per_second);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

namespace {

json request_body(const JudgeConfig& cfg, const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    if (m.image_url) {
      messages.push_back({{"role", m.role},
                          {"content", json::array({{{"type", "text"}, {"text", m.content}},
                                                   {{"type", "image_url"}, {"image_url", {{"url", *m.image_url}}}}})}});
    } else {
      messages.push_back({{"role", m.role}, {"content", m.content}});
    }
  }
  json body{{"model", cfg.model},
            {"messages", messages},
            {"temperature", req.temperature.value_or(cfg.temperature)}};
  if (const auto seed = req.seed ? req.seed : cfg.request_seed) body["seed"] = *seed;
  return body;
}

enum class Failure { none, transport, timeout, rate_limited };

}  // namespace

HttpChatClient::HttpChatClient(JudgeConfig config, Sleeper sleeper)
    : config_(std::move(config)),
      sleeper_(std::move(sleeper)),
      gate_(static_cast<std::size_t>(std::max(1, config_.max_concurrency))) {
  config_.validate();
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint_url, m, kUrl)) {
    throw Error(Errc::InvalidArgument, "endpoint_url", config_.endpoint_url);
  }
  scheme_host_port_ = m[1].str();
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

void HttpChatClient::pace() {
  if (config_.requests_per_second <= 0.0) return;
  const auto spacing = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / config_.requests_per_second));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(pace_mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + spacing;
  }
  std::this_thread::sleep_until(slot);
}

std::string HttpChatClient::complete(const ChatRequest& request) {
  httplib::Headers headers;
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(Errc::AuthFailure, config_.api_key_env, "environment variable not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const std::string body = request_body(config_, request).dump();

  std::vector<std::string> trace;
  Failure last = Failure::none;
  const int attempts = config_.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::optional<std::chrono::milliseconds> retry_after;
    {
      Gate::Hold hold(gate_);
      pace();
      httplib::Client cli(scheme_host_port_);
      const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::duration<double>(config_.timeout_s));
      cli.set_connection_timeout(timeout);
      cli.set_read_timeout(timeout);
      cli.set_write_timeout(timeout);
      const auto started = std::chrono::steady_clock::now();
      const auto res = cli.Post(path_, headers, body, "application/json");
      if (!res) {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        const bool timed_out = res.error() == httplib::Error::ConnectionTimeout || elapsed >= config_.timeout_s * 0.95;
        last = timed_out ? Failure::timeout : Failure::transport;
        trace.push_back("attempt " + std::to_string(attempt + 1) + ": " + httplib::to_string(res.error()));
      } else if (res->status == 401 || res->status == 403) {
        throw Error(Errc::AuthFailure, std::to_string(res->status), res->body);
      } else if (res->status == 429 || res->status >= 500) {
        last = res->status == 429 ? Failure::rate_limited : Failure::transport;
        trace.push_back("attempt " + std::to_string(attempt + 1) + ": HTTP " + std::to_string(res->status));
        if (res->has_header("Retry-After")) {
          try {
            retry_after = std::chrono::milliseconds(
                static_cast<long long>(std::stod(res->get_header_value("Retry-After")) * 1000.0));
          } catch (const std::exception&) {
          }
        }
      } else if (res->status != 200) {
        throw Error(Errc::Transport, "HTTP " + std::to_string(res->status), res->body);
      } else {
        try {
          const auto j = json::parse(res->body);
          const auto& content = j.at("choices").at(0).at("message").at("content");
          if (!content.is_string()) throw std::runtime_error("content is not a string");
          if (attempt > 0) spdlog::info("chat completion succeeded after {} retries", attempt);
          return content.get<std::string>();
        } catch (const std::exception& e) {
          last = Failure::transport;
          trace.push_back("attempt " + std::to_string(attempt + 1) + ": bad response body: " + e.what());
        }
      }
    }
    if (attempt + 1 < attempts) {
      const double backoff = std::min(config_.backoff_max_s, config_.backoff_initial_s * std::pow(2.0, attempt));
      auto delay = std::chrono::milliseconds(static_cast<long long>(backoff * 1000.0));
      if (retry_after) {
        delay = std::min(*retry_after, std::chrono::milliseconds(static_cast<long long>(config_.backoff_max_s * 1000.0)));
      }
      spdlog::warn("chat completion {}; retry {}/{} in {} ms", trace.back(), attempt + 1, config_.max_retries,
                   delay.count());
      ++retries_;
      sleeper_(delay);
    }
  }

  std::string joined;
  for (const auto& t : trace) joined += (joined.empty() ? "" : "; ") + t;
  switch (last) {
    case Failure::rate_limited:
      throw Error(Errc::RateLimited, config_.endpoint_url, joined);
    case Failure::timeout:
      throw Error(Errc::Timeout, config_.endpoint_url, joined);
    default:
      throw Error(Errc::Transport, config_.endpoint_url, joined);
  }
}

std::string chat_complete(const JudgeConfig& config, const std::string& system, const std::string& user) {
  HttpChatClient client(config);
  return client.complete({{{"system", system, std::nullopt}, {"user", user, std::nullopt}}, std::nullopt, std::nullopt});
}

// ---------------------------------------------------------------------------
// Mock backends
// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords{
      "a",      "an",    "the",   "and",   "or",     "but",    "of",     "in",      "on",      "at",
      "to",     "with",  "is",    "are",   "was",    "were",   "be",     "been",    "it",      "its",
      "this",   "that",  "there", "these", "those",  "he",     "she",    "they",    "his",     "her",
      "their",  "also",  "image", "picture", "photo", "shows", "shown",  "show",    "can",     "see",
      "seen",   "visible", "appears", "appear", "looks", "look", "like", "very",    "some",    "any",
      "which",  "who",   "what",  "where", "when",   "has",    "have",   "had",     "not",     "yes",
      "you",    "as",    "by",    "for",   "from",   "into",   "out",    "so",      "such",    "than",
      "then",   "just",  "only",  "one",   "answer", "seems",  "there's", "it's",   "being",   "all",
      "while",  "near",  "next",  "here",  "them",   "him",    "does",   "did",     "do",      "we",
  };
  return kWords;
}

std::string stem(std::string w) {
  if (w.size() > 4 && w.ends_with("ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 3 && w.back() == 's' && !w.ends_with("ss")) w.pop_back();
  return w;
}

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : text::normalized_tokens(s)) {
    if (const auto n = text::number_value(t)) {
      out.push_back(std::to_string(*n));
      continue;
    }
    if (t.size() < 3 || stopwords().count(t)) continue;
    out.push_back(stem(std::move(t)));
  }
  return out;
}

std::vector<std::string> canonical_tokens(std::string_view s) {
  auto tokens = text::normalized_tokens(s);
  for (auto& t : tokens) {
    if (const auto n = text::number_value(t)) t = std::to_string(*n);
  }
  return tokens;
}

std::string tagged(std::string_view msg, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto b = msg.find(open);
  const auto e = msg.rfind(close);
  if (b == std::string_view::npos || e == std::string_view::npos || e < b + open.size()) return {};
  auto body = msg.substr(b + open.size(), e - b - open.size());
  if (body.starts_with('\n')) body.remove_prefix(1);
  if (body.ends_with('\n')) body.remove_suffix(1);
  return std::string(body);
}

}  // namespace

namespace mock_rules {

bool semantic_match(std::string_view ground_truth, std::string_view response) {
  const auto gt = canonical_tokens(ground_truth);
  const auto resp = canonical_tokens(response);
  if (gt.empty() || gt.size() > resp.size()) return false;
  return std::search(resp.begin(), resp.end(), gt.begin(), gt.end()) != resp.end();
}

std::vector<std::string> extra_claims(std::string_view image_facts, std::string_view ground_truth,
                                      std::string_view response) {
  std::set<std::string> known;
  for (auto& w : content_words(image_facts)) known.insert(std::move(w));
  for (auto& w : content_words(ground_truth)) known.insert(std::move(w));
  const auto sentences = text::split_sentences(response);
  std::vector<std::string> claims;
  for (std::size_t i = 1; i < sentences.size(); ++i) {
    const auto words = content_words(sentences[i]);
    const bool unsupported = std::any_of(words.begin(), words.end(), [&](const auto& w) { return !known.count(w); });
    if (unsupported) claims.push_back(sentences[i]);
  }
  return claims;
}

}  // namespace mock_rules

std::string MockJudgeBackend::complete(const ChatRequest& request) {
  ++calls_;
  const auto user = std::find_if(request.messages.begin(), request.messages.end(),
                                 [](const ChatMessage& m) { return m.role == "user"; });
  if (user == request.messages.end()) return "No question was asked.";
  const auto& msg = user->content;
  const auto task = tagged(msg, "task");

  if (task == "main_match") {
    const bool match = mock_rules::semantic_match(tagged(msg, "ground_truth"), tagged(msg, "response"));
    return json{{"verdict", match ? "MATCH" : "MISMATCH"}}.dump();
  }
  if (task == "extra_claims") {
    const auto claims =
        mock_rules::extra_claims(tagged(msg, "image_facts"), tagged(msg, "ground_truth"), tagged(msg, "response"));
    return json{{"extra_claims", claims}}.dump();
  }
  if (task == "hallucination_score") {
    const int k = std::atoi(tagged(msg, "max_score").c_str());
    const bool contains = mock_rules::semantic_match(tagged(msg, "ground_truth"), tagged(msg, "response"));
    return json{{"score", contains ? 0 : k}}.dump();
  }
  if (task == "paraphrase") {
    return json{{"paraphrase", rewrite::template_paraphrase(tagged(msg, "text"))}}.dump();
  }
  if (task == "negate") {
    const auto source = tagged(msg, "text");
    const auto negated = rewrite::template_negate(source);
    return json{{"negated", negated ? *negated : "Is it false that " + text::lower_first(source)}}.dump();
  }
  if (task == "question_gen") {
    return json{{"question", tagged(msg, "draft_question")}, {"answer", tagged(msg, "draft_answer")}}.dump();
  }
  return "I am not sure what you are asking.";
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  requests_.push_back(request);
  if (!replies_.empty()) {
    last_ = replies_.front();
    replies_.pop_front();
  }
  return last_;
}

std::vector<ChatRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kTemplateNames[] = {
    "main_match.v1", "extra_claims.v1", "hallucination_score.v1", "paraphrase.v1", "negate.v1", "question_gen.v1",
};

PromptTemplate load_template(std::string_view name) {
  const std::string file = "prompts/" + std::string(name) + ".txt";
  const auto content = resources::get(file);
  if (!content) throw Error(Errc::Io, file, "prompt template not bundled");
  static constexpr std::string_view kSplit = "=== user ===\n";
  const auto pos = content->find(kSplit);
  if (pos == std::string_view::npos) throw Error(Errc::Config, file, "missing '=== user ===' separator");
  PromptTemplate t;
  t.name = std::string(name);
  t.system = text::trim(content->substr(0, pos));
  t.user = std::string(content->substr(pos + kSplit.size()));
  t.sha256 = text::sha256_hex(*content);
  return t;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view name) {
  static const std::map<std::string, PromptTemplate, std::less<>> kTemplates = [] {
    std::map<std::string, PromptTemplate, std::less<>> m;
    for (const auto n : kTemplateNames) m.emplace(std::string(n), load_template(n));
    return m;
  }();
  const auto it = kTemplates.find(name);
  if (it == kTemplates.end()) throw Error(Errc::InvalidArgument, std::string(name), "unknown prompt template");
  return it->second;
}

std::map<std::string, std::string> prompt_template_hashes() {
  std::map<std::string, std::string> out;
  for (const auto n : kTemplateNames) out[std::string(n)] = prompt_template(n).sha256;
  return out;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(i, open - i));
    const std::string key(tmpl.substr(open + 2, close - open - 2));
    const auto it = values.find(key);
    if (it == values.end()) throw Error(Errc::InvalidArgument, key, "no value for template placeholder");
    out += it->second;
    i = close + 2;
  }
  out.append(tmpl.substr(std::min(i, tmpl.size())));
  return out;
}

std::optional<json> parse_strict_object(std::string_view reply) {
  std::string body = text::trim(reply);
  if (body.starts_with("```")) {
    const auto newline = body.find('\n');
    if (newline == std::string::npos) return std::nullopt;
    const auto tag = text::trim(std::string_view(body).substr(3, newline - 3));
    if (!tag.empty() && text::to_lower(tag) != "json") return std::nullopt;
    if (!body.ends_with("```") || body.size() < newline + 4) return std::nullopt;
    body = body.substr(newline + 1, body.size() - 3 - (newline + 1));
    if (body.find("```") != std::string::npos) return std::nullopt;
  }
  try {
    auto j = json::parse(body);
    if (!j.is_object()) return std::nullopt;
    return j;
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

namespace {

bool has_only_keys(const json& j, std::initializer_list<std::string_view> keys) {
  if (j.size() != keys.size()) return false;
  return std::all_of(keys.begin(), keys.end(), [&](std::string_view k) { return j.contains(std::string(k)); });
}

void require_nonblank(std::string_view value, const char* field) {
  if (text::trim(value).empty()) throw Error(Errc::InvalidArgument, field, "empty");
}

constexpr std::string_view kCorrection =
    "Your previous reply did not follow the required output format. Reply again with exactly one JSON object "
    "as specified, and nothing else.";

}  // namespace

Judge::Judge(JudgeConfig config, std::shared_ptr<ChatBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  if (!backend_) throw Error(Errc::InvalidArgument, "backend", "null");
  if (config_.max_concurrency < 1) throw Error(Errc::InvalidArgument, "max_concurrency", "must be >= 1");
  if (config_.max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries", "must be >= 0");
}

json Judge::exchange(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values,
                     const std::function<bool(const json&)>& accept, std::string& raw) const {
  ChatRequest req;
  req.messages.push_back({"system", render(tmpl.system, values), std::nullopt});
  req.messages.push_back({"user", render(tmpl.user, values), std::nullopt});
  req.temperature = config_.temperature;
  req.seed = config_.request_seed;

  const int attempts = config_.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    raw = backend_->complete(req);
    if (const auto parsed = parse_strict_object(raw); parsed && accept(*parsed)) return *parsed;
    req.messages.push_back({"assistant", raw, std::nullopt});
    req.messages.push_back({"user", std::string(kCorrection), std::nullopt});
  }
  throw Error(Errc::JudgeMalformedOutput, tmpl.name,
              "no acceptable reply after " + std::to_string(attempts) + " attempts; last: " + raw.substr(0, 200));
}

MainMatch Judge::main_match(std::string_view instruction, std::string_view ground_truth,
                            std::string_view response) const {
  require_nonblank(instruction, "instruction");
  require_nonblank(ground_truth, "ground_truth");
  require_nonblank(response, "response");
  MainMatch out;
  const auto j = exchange(prompt_template("main_match.v1"),
                          {{"instruction", std::string(instruction)},
                           {"ground_truth", std::string(ground_truth)},
                           {"response", std::string(response)}},
                          [](const json& j) {
                            if (!has_only_keys(j, {"verdict"})) return false;
                            const auto& v = j["verdict"];
                            return v.is_string() && (v == "MATCH" || v == "MISMATCH");
                          },
                          out.raw);
  out.match = j["verdict"] == "MATCH";
  return out;
}

ExtraClaims Judge::extra_claims(std::string_view image_facts, std::string_view instruction,
                                std::string_view ground_truth, std::string_view response) const {
  if (text::trim(image_facts).empty()) throw Error(Errc::MissingImageFacts, "image_facts");
  require_nonblank(instruction, "instruction");
  require_nonblank(response, "response");
  ExtraClaims out;
  const auto j = exchange(prompt_template("extra_claims.v1"),
                          {{"image_facts", std::string(image_facts)},
                           {"instruction", std::string(instruction)},
                           {"ground_truth", std::string(ground_truth)},
                           {"response", std::string(response)}},
                          [](const json& j) {
                            if (!has_only_keys(j, {"extra_claims"}) || !j["extra_claims"].is_array()) return false;
                            return std::all_of(j["extra_claims"].begin(), j["extra_claims"].end(),
                                               [](const json& c) { return c.is_string(); });
                          },
                          out.raw);
  for (const auto& c : j["extra_claims"]) out.claims.push_back(c.get<std::string>());
  return out;
}

int Judge::hallucination_score(std::string_view rubric, std::string_view ground_truth, std::string_view response,
                               int k) const {
  if (k < 1) throw Error(Errc::InvalidArgument, "k", "must be >= 1");
  require_nonblank(response, "response");
  bool out_of_range = false;
  std::string raw;
  try {
    const auto j = exchange(prompt_template("hallucination_score.v1"),
                            {{"rubric", std::string(rubric)},
                             {"ground_truth", std::string(ground_truth)},
                             {"response", std::string(response)},
                             {"max_score", std::to_string(k)}},
                            [&](const json& j) {
                              out_of_range = false;
                              if (!has_only_keys(j, {"score"}) || !j["score"].is_number_integer()) return false;
                              const auto v = j["score"].get<long long>();
                              out_of_range = v < 0 || v > k;
                              return !out_of_range;
                            },
                            raw);
    return j["score"].get<int>();
  } catch (const Error& e) {
    if (e.code() == Errc::JudgeMalformedOutput && out_of_range) {
      throw Error(Errc::ScoreOutOfRange, raw.substr(0, 100), "expected 0.." + std::to_string(k));
    }
    throw;
  }
}

std::string Judge::paraphrase(std::string_view input) const {
  require_nonblank(input, "text");
  const auto source = text::trim(input);
  for (int round = 0; round < 2; ++round) {
    std::string raw;
    json j;
    try {
      j = exchange(prompt_template("paraphrase.v1"), {{"text", source}},
                   [](const json& j) { return has_only_keys(j, {"paraphrase"}) && j["paraphrase"].is_string(); },
                   raw);
    } catch (const Error& e) {
      if (e.code() == Errc::JudgeMalformedOutput) throw Error(Errc::ParaphraseFailure, source, e.what());
      throw;
    }
    auto out = text::trim(j["paraphrase"].get<std::string>());
    if (!out.empty() && out != source) return out;
  }
  throw Error(Errc::ParaphraseFailure, source, "judge returned empty or unchanged text");
}

std::string Judge::negate(std::string_view question) const {
  require_nonblank(question, "text");
  const auto source = text::trim(question);
  std::string raw;
  json j;
  try {
    j = exchange(prompt_template("negate.v1"), {{"text", source}},
                 [](const json& j) { return has_only_keys(j, {"negated"}) && j["negated"].is_string(); }, raw);
  } catch (const Error& e) {
    if (e.code() == Errc::JudgeMalformedOutput) throw Error(Errc::ParaphraseFailure, source, e.what());
    throw;
  }
  auto out = text::trim(j["negated"].get<std::string>());
  if (out.empty() || out == source) throw Error(Errc::ParaphraseFailure, source, "negation unchanged");
  return out;
}

Judge::GeneratedQuestion Judge::generate_question(std::string_view dimension, std::string_view image_facts,
                                                  std::string_view draft_question,
                                                  std::string_view draft_answer) const {
  std::string raw;
  json j;
  try {
    j = exchange(prompt_template("question_gen.v1"),
                 {{"dimension", std::string(dimension)},
                  {"image_facts", std::string(image_facts)},
                  {"draft_question", std::string(draft_question)},
                  {"draft_answer", std::string(draft_answer)}},
                 [](const json& j) {
                   return has_only_keys(j, {"question", "answer"}) && j["question"].is_string() &&
                          j["answer"].is_string();
                 },
                 raw);
  } catch (const Error& e) {
    if (e.code() == Errc::JudgeMalformedOutput) throw Error(Errc::GenerationFailure, std::string(draft_question), e.what());
    throw;
  }
  return {text::trim(j["question"].get<std::string>()), text::trim(j["answer"].get<std::string>())};
}

JudgeVerdict Judge::verdict(const Sample& sample, const ModelResponse& response) const {
  if (!sample.image_facts || text::trim(*sample.image_facts).empty()) {
    throw Error(Errc::MissingImageFacts, sample.sample_id);
  }
  JudgeVerdict v;
  v.sample_id = sample.sample_id;
  v.model_id = response.model_id;
  if (text::trim(response.text).empty()) {
    // Nothing to grade: an empty answer never matches and asserts nothing.
    v.raw_judge_output = "";
    return v;
  }
  const auto gt = ground_truth_text(sample.ground_truth);
  const auto main = main_match(sample.instruction, gt, response.text);
  const auto extra = extra_claims(*sample.image_facts, sample.instruction, gt, response.text);
  v.main_match = main.match;
  v.extra_claims = extra.claims;
  v.extra_claim_count = static_cast<int>(extra.claims.size());
  v.raw_judge_output = main.raw + "\n" + extra.raw;
  return v;
}

json to_json(const JudgeVerdict& v) {
  return {{"sample_id", v.sample_id},
          {"model_id", v.model_id},
          {"main_match", v.main_match},
          {"extra_claims", v.extra_claims},
          {"extra_claim_count", v.extra_claim_count},
          {"raw_judge_output", v.raw_judge_output}};
}

JudgeVerdict verdict_from_json(const json& j) {
  JudgeVerdict v;
  try {
    v.sample_id = j.at("sample_id").get<std::string>();
    v.model_id = j.at("model_id").get<std::string>();
    v.main_match = j.at("main_match").get<bool>();
    v.extra_claims = j.at("extra_claims").get<std::vector<std::string>>();
    v.extra_claim_count = j.at("extra_claim_count").get<int>();
    v.raw_judge_output = j.value("raw_judge_output", "");
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, "verdict", e.what());
  }
  if (v.extra_claim_count != static_cast<int>(v.extra_claims.size())) {
    throw Error(Errc::SchemaViolation, "extra_claim_count", "does not equal the number of claims");
  }
  return v;
}

std::shared_ptr<ChatBackend> make_backend(const JudgeConfig& config) {
  if (config.backend == "mock") return std::make_shared<MockJudgeBackend>();
  return std::make_shared<HttpChatClient>(config);
}

Judge make_judge(const JudgeConfig& config) {
  config.validate();
  return Judge(config, make_backend(config));
}

}  // namespace hqm
