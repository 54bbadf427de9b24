#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "hqm/concurrency.hpp"
#include "hqm/config.hpp"
#include "hqm/judge.hpp"
#include "test_util.hpp"

using namespace hqm;
using hqm::testing::code_of;

namespace {

std::shared_ptr<ScriptedBackend> scripted(std::vector<std::string> replies) {
  return std::make_shared<ScriptedBackend>(std::move(replies));
}

JudgeConfig mock_config(int retries = 2) {
  JudgeConfig c;
  c.backend = "mock";
  c.max_retries = retries;
  return c;
}

std::string completion(const std::string& content) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

// Local OpenAI-compatible endpoint whose behavior each test scripts.
class FakeEndpoint {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit FakeEndpoint(Handler h) : handler_(std::move(h)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  JudgeConfig config() const {
    JudgeConfig c;
    c.backend = "http";
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.model = "judge-model";
    c.timeout_s = 5;
    c.backoff_initial_s = 0.001;
    c.backoff_max_s = 0.01;
    return c;
  }
  int hits() const { return hits_.load(); }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
};

ChatRequest simple_request() {
  ChatRequest r;
  r.messages.push_back({"user", "hi", std::nullopt});
  return r;
}

}  // namespace

TEST(StrictParse, AcceptsBareObjectAndSingleFence) {
  EXPECT_TRUE(parse_strict_object(R"({"verdict":"MATCH"})"));
  EXPECT_TRUE(parse_strict_object("  {\"a\": 1}\n"));
  EXPECT_TRUE(parse_strict_object("```json\n{\"a\": 1}\n```"));
  EXPECT_TRUE(parse_strict_object("```\n{\"a\": 1}\n```"));
}

TEST(StrictParse, RejectsProseArraysAndExtraFences) {
  EXPECT_FALSE(parse_strict_object("Sure! {\"a\": 1}"));
  EXPECT_FALSE(parse_strict_object("{\"a\": 1} hope that helps"));
  EXPECT_FALSE(parse_strict_object("[1, 2]"));
  EXPECT_FALSE(parse_strict_object("```python\n{\"a\": 1}\n```"));
  EXPECT_FALSE(parse_strict_object("```json\n{\"a\": 1}\n```\n```json\n{}\n```"));
  EXPECT_FALSE(parse_strict_object("Here:\n```json\n{\"a\": 1}\n```"));
  EXPECT_FALSE(parse_strict_object(""));
}

TEST(JudgeProtocol, RetriesWithCorrectionTurn) {
  auto backend = scripted({"I think it matches.", R"({"verdict":"MATCH"})"});
  Judge judge(mock_config(), backend);
  const auto m = judge.main_match("What animal?", "dog", "A dog.");
  EXPECT_TRUE(m.match);
  const auto reqs = backend->requests();
  ASSERT_EQ(reqs.size(), 2u);
  EXPECT_EQ(reqs[0].messages.size(), 2u);
  ASSERT_EQ(reqs[1].messages.size(), 4u);
  EXPECT_EQ(reqs[1].messages[2].role, "assistant");
  EXPECT_EQ(reqs[1].messages[2].content, "I think it matches.");
  EXPECT_EQ(reqs[1].messages[3].role, "user");
}

TEST(JudgeProtocol, MalformedAfterRetriesExhausted) {
  auto backend = scripted({R"({"verdict":"maybe"})"});
  Judge judge(mock_config(2), backend);
  EXPECT_EQ(code_of([&] { judge.main_match("q", "dog", "dog"); }), Errc::JudgeMalformedOutput);
  EXPECT_EQ(backend->requests().size(), 3u);
}

TEST(JudgeProtocol, ExtraKeysRejected) {
  auto backend = scripted({R"({"verdict":"MATCH","why":"x"})"});
  Judge judge(mock_config(0), backend);
  EXPECT_EQ(code_of([&] { judge.main_match("q", "dog", "dog"); }), Errc::JudgeMalformedOutput);
}

TEST(JudgeProtocol, ExtraClaimsAndMissingFacts) {
  auto backend = scripted({R"({"extra_claims":["A cat sleeps."]})"});
  Judge judge(mock_config(), backend);
  EXPECT_EQ(judge.extra_claims("Objects: dog", "q", "dog", "A dog. A cat sleeps.").claims,
            std::vector<std::string>{"A cat sleeps."});
  EXPECT_EQ(code_of([&] { judge.extra_claims("  ", "q", "dog", "A dog."); }), Errc::MissingImageFacts);
  EXPECT_EQ(code_of([&] { judge.main_match("q", "dog", ""); }), Errc::InvalidArgument);
}

TEST(JudgeProtocol, ScoreRange) {
  Judge ok(mock_config(), scripted({R"({"score": 2})"}));
  EXPECT_EQ(ok.hallucination_score("rubric", "dog", "cat", 3), 2);
  Judge bad(mock_config(1), scripted({R"({"score": 9})"}));
  EXPECT_EQ(code_of([&] { bad.hallucination_score("rubric", "dog", "cat", 3); }), Errc::ScoreOutOfRange);
  Judge prose(mock_config(1), scripted({"nine"}));
  EXPECT_EQ(code_of([&] { prose.hallucination_score("rubric", "dog", "cat", 3); }), Errc::JudgeMalformedOutput);
}

TEST(JudgeProtocol, TemperatureAndSeedForwarded) {
  auto backend = scripted({R"({"verdict":"MISMATCH"})"});
  auto cfg = mock_config();
  cfg.temperature = 0.0;
  cfg.request_seed = 1234;
  Judge judge(cfg, backend);
  EXPECT_FALSE(judge.main_match("q", "dog", "cat").match);
  const auto req = backend->requests().at(0);
  EXPECT_EQ(req.temperature, 0.0);
  EXPECT_EQ(req.seed, 1234);
}

TEST(JudgeProtocol, VerdictSkipsJudgeForEmptyResponse) {
  auto backend = scripted({R"({"verdict":"MATCH"})"});
  Judge judge(mock_config(), backend);
  Sample s{"s1", "img", "Objects: dog", "What animal?", FreeFormTruth{"dog"}, Dimension::existence, {}};
  ModelResponse r{"s1", "m", "run", 0, "   ", {}, ""};
  const auto v = judge.verdict(s, r);
  EXPECT_FALSE(v.main_match);
  EXPECT_EQ(v.extra_claim_count, 0);
  EXPECT_TRUE(backend->requests().empty());
  s.image_facts.reset();
  EXPECT_EQ(code_of([&] { judge.verdict(s, r); }), Errc::MissingImageFacts);
}

TEST(JudgeProtocol, VerdictJsonRoundTrip) {
  JudgeVerdict v{"s", "m", true, {"a", "b"}, 2, "raw"};
  EXPECT_EQ(verdict_from_json(to_json(v)), v);
  auto j = to_json(v);
  j["extra_claim_count"] = 3;
  EXPECT_EQ(code_of([&] { verdict_from_json(j); }), Errc::SchemaViolation);
}

TEST(MockRules, SemanticMatch) {
  EXPECT_TRUE(mock_rules::semantic_match("dog", "It is a dog."));
  EXPECT_TRUE(mock_rules::semantic_match("two", "I can see 2 dogs."));
  EXPECT_TRUE(mock_rules::semantic_match("on the table", "The cup is on the table."));
  EXPECT_FALSE(mock_rules::semantic_match("dog", "A hotdog stand."));
  EXPECT_FALSE(mock_rules::semantic_match("three", "There are five apples."));
  EXPECT_FALSE(mock_rules::semantic_match("on the table", "The table is on the cup."));
}

TEST(MockRules, ExtraClaims) {
  const auto facts = "Objects: man running in the park; trees.";
  EXPECT_TRUE(mock_rules::extra_claims(facts, "running", "The man is running.").empty());
  EXPECT_EQ(mock_rules::extra_claims(facts, "running", "The man is running. He wears a yellow hat.").size(), 1u);
  EXPECT_TRUE(mock_rules::extra_claims(facts, "running", "The man is running. There are trees.").empty());
}

TEST(MockBackend, DeterministicThroughJudge) {
  auto backend = std::make_shared<MockJudgeBackend>();
  Judge judge(mock_config(), backend);
  Sample s{"h04", "img", "Objects: man running in the park; trees.", "What is the man doing?",
           FreeFormTruth{"running"}, Dimension::action, {}};
  ModelResponse r{"h04", "m", "run", 0, "The man is running. He wears a yellow hat. A bicycle is lying on the path.",
                  {}, ""};
  const auto v1 = judge.verdict(s, r);
  const auto v2 = judge.verdict(s, r);
  EXPECT_EQ(v1, v2);
  EXPECT_TRUE(v1.main_match);
  EXPECT_EQ(v1.extra_claim_count, 2);
  EXPECT_EQ(backend->calls(), 4u);
}

TEST(Prompts, TemplatesBundledAndHashed) {
  const auto hashes = prompt_template_hashes();
  for (const auto* name : {"main_match.v1", "extra_claims.v1", "hallucination_score.v1", "paraphrase.v1", "negate.v1",
                           "question_gen.v1"}) {
    ASSERT_TRUE(hashes.count(name)) << name;
    EXPECT_EQ(hashes.at(name).size(), 64u);
    EXPECT_FALSE(prompt_template(name).user.empty());
  }
  EXPECT_EQ(render("a {{x}} b", {{"x", "1"}}), "a 1 b");
  EXPECT_EQ(code_of([] { render("{{y}}", {}); }), Errc::InvalidArgument);
}

TEST(JudgeConfigFile, ReadsSection) {
  const auto cfg = Config::parse(
      "[judge]\nbackend = http\nendpoint_url = http://localhost:1/v1\nmodel = m\nrequest_seed = none\n"
      "max_concurrency = 3\n");
  const auto j = judge_config_from(cfg);
  EXPECT_EQ(j.endpoint_url, "http://localhost:1/v1");
  EXPECT_FALSE(j.request_seed.has_value());
  EXPECT_EQ(j.max_concurrency, 3);
  EXPECT_EQ(code_of([] { judge_config_from(Config::parse("[judge]\nbackend = mock\nmax_concurrency = 0\n")); }),
            Errc::InvalidArgument);
}

TEST(HttpClient, SendsModelTemperatureSeedAndKey) {
  json seen;
  std::string auth;
  FakeEndpoint ep([&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(completion("hello"), "application/json");
  });
  ::setenv("HQM_TEST_KEY", "sk-test", 1);
  auto cfg = ep.config();
  cfg.api_key_env = "HQM_TEST_KEY";
  cfg.request_seed = 77;
  HttpChatClient client(cfg);
  EXPECT_EQ(client.complete(simple_request()), "hello");
  EXPECT_EQ(seen["model"], "judge-model");
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["seed"], 77);
  EXPECT_EQ(seen["messages"][0]["content"], "hi");
  EXPECT_EQ(auth, "Bearer sk-test");
}

TEST(HttpClient, RetriesRateLimitHonoringRetryAfter) {
  std::atomic<int> n{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    if (n++ < 2) {
      res.status = 429;
      res.set_header("Retry-After", "0.005");
      return;
    }
    res.set_content(completion("ok"), "application/json");
  });
  std::vector<std::chrono::milliseconds> sleeps;
  auto cfg = ep.config();
  cfg.backoff_max_s = 10;
  HttpChatClient client(cfg, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  EXPECT_EQ(client.complete(simple_request()), "ok");
  EXPECT_EQ(ep.hits(), 3);
  EXPECT_EQ(client.retry_count(), 2u);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[0], std::chrono::milliseconds(5));
}

TEST(HttpClient, ServerErrorsExhaustRetries) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  auto cfg = ep.config();
  cfg.max_retries = 3;
  HttpChatClient client(cfg, [](std::chrono::milliseconds) {});
  EXPECT_EQ(code_of([&] { client.complete(simple_request()); }), Errc::Transport);
  EXPECT_EQ(ep.hits(), 4);

  FakeEndpoint limited([](const httplib::Request&, httplib::Response& res) { res.status = 429; });
  HttpChatClient c2(limited.config(), [](std::chrono::milliseconds) {});
  EXPECT_EQ(code_of([&] { c2.complete(simple_request()); }), Errc::RateLimited);
}

TEST(HttpClient, BackoffIsExponentialAndCapped) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  auto cfg = ep.config();
  cfg.max_retries = 5;
  cfg.backoff_initial_s = 0.1;
  cfg.backoff_max_s = 0.5;
  std::vector<long long> sleeps;
  HttpChatClient client(cfg, [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  EXPECT_THROW(client.complete(simple_request()), Error);
  EXPECT_EQ(sleeps, (std::vector<long long>{100, 200, 400, 500, 500}));
}

TEST(HttpClient, AuthFailureIsNotRetried) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  HttpChatClient client(ep.config(), [](std::chrono::milliseconds) {});
  EXPECT_EQ(code_of([&] { client.complete(simple_request()); }), Errc::AuthFailure);
  EXPECT_EQ(ep.hits(), 1);

  auto cfg = ep.config();
  cfg.api_key_env = "HQM_TEST_KEY_THAT_IS_UNSET";
  ::unsetenv("HQM_TEST_KEY_THAT_IS_UNSET");
  HttpChatClient no_key(cfg);
  EXPECT_EQ(code_of([&] { no_key.complete(simple_request()); }), Errc::AuthFailure);
  EXPECT_EQ(ep.hits(), 1);
}

TEST(HttpClient, ConcurrencyIsBounded) {
  std::atomic<int> in_flight{0}, peak{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    const int now = ++in_flight;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --in_flight;
    res.set_content(completion("ok"), "application/json");
  });
  auto cfg = ep.config();
  cfg.max_concurrency = 2;
  HttpChatClient client(cfg);
  parallel_for(8, 8, [&](std::size_t) { EXPECT_EQ(client.complete(simple_request()), "ok"); });
  EXPECT_EQ(ep.hits(), 8);
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}

TEST(HttpClient, ConnectionRefusedIsTransport) {
  JudgeConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:1/v1";
  cfg.max_retries = 1;
  cfg.timeout_s = 2;
  HttpChatClient client(cfg, [](std::chrono::milliseconds) {});
  EXPECT_EQ(code_of([&] { client.complete(simple_request()); }), Errc::Transport);
  JudgeConfig bad;
  bad.endpoint_url = "ftp://x";
  EXPECT_EQ(code_of([&] { HttpChatClient c(bad); }), Errc::InvalidArgument);
}
