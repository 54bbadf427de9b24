#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hqm/concurrency.hpp"
#include "hqm/datamodel.hpp"

namespace hqm {

class Config;

struct JudgeConfig {
  std::string backend = "http";  // "http" or "mock"
  std::string endpoint_url;      // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key_env;       // name of the env var holding the key
  double temperature = 0.0;
  std::optional<std::int64_t> request_seed = 0;
  int max_retries = 2;
  int max_concurrency = 4;
  double timeout_s = 60.0;
  double backoff_initial_s = 0.5;
  double backoff_max_s = 16.0;
  double requests_per_second = 0.0;  // 0 disables spacing

  /// Throws InvalidArgument when max_concurrency < 1, temperature < 0, or
  /// max_retries < 0.
  void validate() const;
};

/// Reads section [section] (default "judge"): backend, endpoint_url, model,
/// api_key_env, temperature, request_seed ("none" disables), max_retries,
/// max_concurrency, timeout_s, backoff_initial_s, backoff_max_s,
/// requests_per_second.
JudgeConfig judge_config_from(const Config& cfg, const std::string& section = "judge");

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

struct ChatMessage {
  std::string role;
  std::string content;
  std::optional<std::string> image_url;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::optional<double> temperature;
  std::optional<std::int64_t> seed;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the assistant message content.
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// OpenAI-compatible client: POST {endpoint_url}/chat/completions, reads
/// choices[0].message.content. Transport errors, 5xx and 429 are retried with
/// exponential backoff (Retry-After honored, capped at backoff_max_s); 401/403
/// fail immediately with AuthFailure. In-flight requests are bounded by
/// max_concurrency.
class HttpChatClient : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpChatClient(JudgeConfig config, Sleeper sleeper = {});

  std::string complete(const ChatRequest& request) override;

  /// Backoff sleeps performed so far, across all calls.
  std::size_t retry_count() const noexcept { return retries_.load(); }

 private:
  void pace();

  JudgeConfig config_;
  Sleeper sleeper_;
  std::string scheme_host_port_;
  std::string path_;
  Gate gate_;
  std::mutex pace_mu_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::atomic<std::size_t> retries_{0};
};

/// chat_complete over a fresh HttpChatClient with one system and one user
/// message.
std::string chat_complete(const JudgeConfig& config, const std::string& system, const std::string& user);

/// Deterministic offline judge. It reads the tagged sections of the bundled
/// prompt templates and applies fixture rules; it is not a hallucination
/// detector.
///
///   main_match          MATCH iff the normalized ground-truth token sequence
///                       occurs contiguously in the response (numerals and
///                       number words compare by value).
///   extra_claims        every sentence after the first whose content words
///                       are not all found in the image facts or ground truth
///                       is one claim.
///   hallucination_score 0 if the response contains the ground truth, else k.
///   paraphrase, negate  template rewrites.
///   question_gen        echoes the draft question and answer.
class MockJudgeBackend : public ChatBackend {
 public:
  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Replays canned replies in order (the last one repeats); records requests.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies);
  std::string complete(const ChatRequest& request) override;
  std::vector<ChatRequest> requests() const;

 private:
  mutable std::mutex mu_;
  std::deque<std::string> replies_;
  std::string last_;
  std::vector<ChatRequest> requests_;
};

// Mock fixture rules, exposed for tests and for building fixtures.
namespace mock_rules {
bool semantic_match(std::string_view ground_truth, std::string_view response);
std::vector<std::string> extra_claims(std::string_view image_facts, std::string_view ground_truth,
                                      std::string_view response);
}  // namespace mock_rules

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

struct PromptTemplate {
  std::string name;  // e.g. "main_match.v1"
  std::string system;
  std::string user;
  std::string sha256;  // of the template file
};

/// Loads prompts/<name>.txt from the bundled resources. The file holds the
/// system prompt, a line "=== user ===", then the user prompt; {{key}}
/// placeholders are substituted by render().
const PromptTemplate& prompt_template(std::string_view name);
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Accepts either a bare JSON object or exactly one fenced code block
/// (``` or ```json) holding one, with nothing else around it.
std::optional<json> parse_strict_object(std::string_view reply);

struct MainMatch {
  bool match = false;
  std::string raw;
};

struct ExtraClaims {
  std::vector<std::string> claims;
  std::string raw;
};

struct JudgeVerdict {
  std::string sample_id;
  std::string model_id;
  bool main_match = false;
  std::vector<std::string> extra_claims;
  int extra_claim_count = 0;
  std::string raw_judge_output;

  bool operator==(const JudgeVerdict&) const = default;
};

json to_json(const JudgeVerdict& v);
JudgeVerdict verdict_from_json(const json& j);

struct HallucinationScore {
  std::string sample_id;
  std::string model_id;
  int score = 0;
};

/// The LLM-assisted operations over one backend. Each strict-JSON exchange is
/// attempted 1 + max_retries times; the correction turn repeats the output
/// contract.
class Judge {
 public:
  Judge(JudgeConfig config, std::shared_ptr<ChatBackend> backend);

  /// {"verdict": "MATCH"|"MISMATCH"}. InvalidArgument on empty inputs.
  MainMatch main_match(std::string_view instruction, std::string_view ground_truth,
                       std::string_view response) const;

  /// {"extra_claims": [...]}. MissingImageFacts when facts are blank.
  ExtraClaims extra_claims(std::string_view image_facts, std::string_view instruction,
                           std::string_view ground_truth, std::string_view response) const;

  /// {"score": n} with 0 <= n <= k. ScoreOutOfRange if the final attempt is
  /// out of range, JudgeMalformedOutput if it does not parse.
  int hallucination_score(std::string_view rubric, std::string_view ground_truth, std::string_view response,
                          int k) const;

  /// {"paraphrase": "..."}; re-asks once when the text comes back unchanged.
  std::string paraphrase(std::string_view text) const;

  /// {"negated": "..."} for yes/no questions outside the negation templates.
  std::string negate(std::string_view question) const;

  struct GeneratedQuestion {
    std::string question;
    std::string answer;
  };
  GeneratedQuestion generate_question(std::string_view dimension, std::string_view image_facts,
                                      std::string_view draft_question, std::string_view draft_answer) const;

  /// Both judge calls for one response.
  JudgeVerdict verdict(const Sample& sample, const ModelResponse& response) const;

  const JudgeConfig& config() const noexcept { return config_; }
  ChatBackend& backend() const noexcept { return *backend_; }

 private:
  json exchange(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values,
                const std::function<bool(const json&)>& accept, std::string& raw) const;

  JudgeConfig config_;
  std::shared_ptr<ChatBackend> backend_;
};

/// backend "mock" -> MockJudgeBackend, anything else -> HttpChatClient.
std::shared_ptr<ChatBackend> make_backend(const JudgeConfig& config);
Judge make_judge(const JudgeConfig& config);

/// name -> sha256 of every bundled prompt template, for report provenance.
std::map<std::string, std::string> prompt_template_hashes();

}  // namespace hqm
