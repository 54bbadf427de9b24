#include <gtest/gtest.h>

#include <random>

#include "hqm/metrics.hpp"
#include "test_util.hpp"

using namespace hqm;
using namespace hqm::metrics;
using hqm::testing::code_of;
using hqm::testing::fixture;

namespace {

Sample yn(const std::string& id, bool answer) {
  return Sample{id, "img", std::nullopt, "Is there a dog?", YesNoTruth{answer}, std::nullopt, std::nullopt};
}

ModelResponse resp(const std::string& id, const std::string& text, const std::string& model = "m") {
  return ModelResponse{id, model, "run", 0, text, std::nullopt, ""};
}

std::map<std::string, std::string> captions_of(const std::vector<ModelResponse>& rs) {
  std::map<std::string, std::string> out;
  for (const auto& r : rs) out[r.sample_id] = r.text;
  return out;
}

}  // namespace

TEST(ExtractYesNo, Policies) {
  ParsePolicy scan;
  ParsePolicy first{ParseMode::first_token, true};
  EXPECT_EQ(extract_yes_no("Yes, there is.", scan), true);
  EXPECT_EQ(extract_yes_no("No.", scan), false);
  EXPECT_EQ(extract_yes_no("In the image, yes there is a dog.", scan), true);
  EXPECT_EQ(extract_yes_no("In the image, yes there is a dog.", first), std::nullopt);
  EXPECT_EQ(extract_yes_no("There is a dog. Yes.", scan), std::nullopt);
  EXPECT_EQ(extract_yes_no("", scan), std::nullopt);
  EXPECT_EQ(extract_yes_no("YES", ParsePolicy{ParseMode::first_token, false}), std::nullopt);
  EXPECT_EQ(extract_yes_no("Yes", ParsePolicy{ParseMode::first_token, false}), true);
}

TEST(ExtractOption, LettersAndArticle) {
  ParsePolicy p;
  EXPECT_EQ(extract_option("B", 4, p), 1);
  EXPECT_EQ(extract_option("(C) red", 4, p), 2);
  EXPECT_EQ(extract_option("The answer is D.", 4, p), 3);
  EXPECT_EQ(extract_option("a", 4, p), 0);
  EXPECT_EQ(extract_option("a dog is sitting", 4, p), std::nullopt);
  EXPECT_EQ(extract_option("E", 4, p), std::nullopt);
}

TEST(Accuracy, YesNoCountsUnparsedAsWrong) {
  const std::vector<Sample> s{yn("a", true), yn("b", false), yn("c", true), yn("d", false)};
  const std::vector<ModelResponse> r{resp("a", "Yes."), resp("b", "Yes"), resp("c", "Maybe."), resp("d", "No")};
  const auto acc = accuracy_yes_no(s, r, {});
  EXPECT_DOUBLE_EQ(acc.acc, 0.5);
  EXPECT_DOUBLE_EQ(acc.acc_parsed, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(acc.yes_ratio, 0.5);
  EXPECT_EQ(acc.unparsed, 1u);
  EXPECT_EQ(acc.unparsed_ids, std::vector<std::string>{"c"});
}

TEST(Accuracy, CoverageGap) {
  const std::vector<Sample> s{yn("a", true), yn("b", false)};
  EXPECT_EQ(code_of([&] { accuracy_yes_no(s, {resp("a", "yes")}, {}); }), Errc::CoverageGap);
  EXPECT_EQ(code_of([&] { accuracy_yes_no(s, {resp("a", "yes"), resp("b", "no"), resp("z", "no")}, {}); }),
            Errc::CoverageGap);
  EXPECT_EQ(code_of([&] { accuracy_yes_no(s, {resp("a", "yes"), resp("b", "no")}, {ParseMode::judge_fallback, true}); }),
            Errc::InvalidArgument);
}

TEST(Accuracy, Mcq) {
  const std::vector<Sample> s{
      Sample{"m1", "img", std::nullopt, "Color?", McqTruth{{"red", "blue", "green"}, 1}, {}, {}},
      Sample{"m2", "img", std::nullopt, "Color?", McqTruth{{"red", "blue", "green"}, 2}, {}, {}}};
  const auto acc = accuracy_mcq(s, {resp("m1", "B. blue"), resp("m2", "I am not sure")}, {});
  EXPECT_DOUBLE_EQ(acc.acc, 0.5);
  EXPECT_DOUBLE_EQ(acc.acc_parsed, 1.0);
  EXPECT_EQ(acc.unparsed, 1u);
}

TEST(Lexicon, LongestMatchAndPlurals) {
  const auto lex = ObjectLexicon::load(fixture("chair/lexicon.json"));
  EXPECT_EQ(lex.mentions("A hot dog on the dining table."), (std::set<std::string>{"hot dog", "dining table"}));
  EXPECT_EQ(lex.mentions("Two DOGS and some trees."), (std::set<std::string>{"dog", "tree"}));
  EXPECT_EQ(lex.mentions("A catalog."), std::set<std::string>{});
  EXPECT_EQ(lex.mentions("people, puppy"), (std::set<std::string>{"person", "dog"}));
}

TEST(Chair, FixtureValues) {
  const auto spec = load_benchmark(fixture("chair/benchmark.jsonl"));
  const auto lex = ObjectLexicon::load(fixture("chair/lexicon.json"));
  const auto caps = captions_of(load_responses(fixture("chair/responses.jsonl")));
  const auto res = chair(caps, spec.samples, lex);

  ASSERT_EQ(res.per_sample.size(), 3u);
  // man -> person, frisbee, dog, bench: four mentions, bench is not in the image.
  EXPECT_EQ(res.per_sample[0].mentioned, 4u);
  EXPECT_EQ(res.per_sample[0].hallucinated, 1u);
  EXPECT_EQ(res.per_sample[0].chair, 0.25);
  EXPECT_EQ(res.per_sample[0].hallucinated_objects, std::vector<std::string>{"bench"});
  EXPECT_EQ(res.per_sample[1].chair, 0.0);
  EXPECT_EQ(res.per_sample[2].mentioned, 0u);
  EXPECT_FALSE(res.per_sample[2].chair.has_value());
  EXPECT_EQ(res.mentioned, 6u);
  EXPECT_EQ(res.hallucinated, 1u);
  EXPECT_DOUBLE_EQ(res.chair, 1.0 / 6.0);

  // The zero-mention caption leaves the corpus value untouched.
  auto without = caps;
  without.erase("c3");
  EXPECT_EQ(chair(without, spec.samples, lex).chair, res.chair);
}

TEST(Chair, SingleCaseValues) {
  const auto spec = load_benchmark(fixture("chair/benchmark.jsonl"));
  const auto lex = ObjectLexicon::load(fixture("chair/lexicon.json"));
  EXPECT_EQ(chair({{"c1", "A man throws a frisbee to a dog near a bench."}}, spec.samples, lex).chair, 0.25);
  EXPECT_EQ(chair({{"c2", "A kitten sits on the dining table."}}, spec.samples, lex).chair, 0.0);
  EXPECT_EQ(chair({{"c3", "Nothing to see."}}, spec.samples, lex).chair, 0.0);
}

TEST(Chair, Errors) {
  const auto spec = load_benchmark(fixture("chair/benchmark.jsonl"));
  const auto lex = ObjectLexicon::load(fixture("chair/lexicon.json"));
  EXPECT_EQ(code_of([&] { chair({{"c1", "a dog"}}, spec.samples, ObjectLexicon{}); }), Errc::EmptyLexicon);
  EXPECT_EQ(code_of([&] { chair({{"zz", "a dog"}}, spec.samples, lex); }), Errc::CoverageGap);
  EXPECT_EQ(code_of([&] { chair({{"a", "a dog"}}, {yn("a", true)}, lex); }), Errc::SchemaViolation);
}

TEST(Length, AverageTokens) {
  EXPECT_DOUBLE_EQ(avg_response_length(std::vector<std::string>{"a b c", "d", "  e  f "}), 2.0);
  EXPECT_EQ(code_of([] { avg_response_length(std::vector<std::string>{}); }), Errc::EmptySet);
}

TEST(Hqh, FixtureHandEnumerated) {
  // h01-h03 miss the main answer; h01, h04, h05, h06 add 1, 2, 2, 1 claims.
  const auto spec = load_benchmark(fixture("hqh/benchmark.jsonl"));
  const auto responses = load_responses(fixture("hqh/responses.jsonl"));
  Judge judge(JudgeConfig{.backend = "mock"}, std::make_shared<MockJudgeBackend>());
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : spec.samples) by_id[s.sample_id] = &s;
  std::vector<JudgeVerdict> verdicts;
  for (const auto& r : responses) verdicts.push_back(judge.verdict(*by_id.at(r.sample_id), r));

  std::map<std::string, std::pair<bool, int>> got;
  for (const auto& v : verdicts) got[v.sample_id] = {v.main_match, v.extra_claim_count};
  const std::map<std::string, std::pair<bool, int>> expected{
      {"h01", {false, 1}}, {"h02", {false, 0}}, {"h03", {false, 0}}, {"h04", {true, 2}},
      {"h05", {true, 2}},  {"h06", {true, 1}},  {"h07", {true, 0}},  {"h08", {true, 0}},
      {"h09", {true, 0}},  {"h10", {true, 0}},  {"h11", {true, 0}},  {"h12", {true, 0}}};
  EXPECT_EQ(got, expected);

  const auto res = hqh_metrics(verdicts, spec.samples);
  EXPECT_EQ(res.overall.main_hal_pct, 0.25);
  EXPECT_EQ(res.overall.extra_num_hal, 0.5);
  EXPECT_EQ(res.overall.overall_hal_pct, 0.5);
  EXPECT_EQ(res.overall.n, 12u);

  EXPECT_EQ(res.per_dimension.at(Dimension::existence).main_hal_pct, 0.5);
  EXPECT_EQ(res.per_dimension.at(Dimension::action).extra_num_hal, 1.0);
  EXPECT_EQ(res.per_dimension.at(Dimension::text).overall_hal_pct, 0.0);
  // object: h01 h02 h09 h10; attribute: h03 h04 h11 h12; scene: h05-h08.
  EXPECT_EQ(res.per_level.at(Level::object).main_hal_pct, 0.5);
  EXPECT_EQ(res.per_level.at(Level::attribute).overall_hal_pct, 0.5);
  EXPECT_EQ(res.per_level.at(Level::scene).extra_num_hal, 0.75);
}

TEST(Hqh, MainNeverExceedsOverall) {
  std::mt19937_64 g(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(g() % 40);
    std::vector<Sample> samples;
    std::vector<JudgeVerdict> verdicts;
    for (int i = 0; i < n; ++i) {
      const auto id = "s" + std::to_string(i);
      samples.push_back(Sample{id, "img", "facts", "q", FreeFormTruth{"a"}, kAllDimensions[g() % 8], std::nullopt});
      JudgeVerdict v;
      v.sample_id = id;
      v.model_id = "m";
      v.main_match = g() % 2;
      v.extra_claim_count = static_cast<int>(g() % 3);
      for (int k = 0; k < v.extra_claim_count; ++k) v.extra_claims.push_back("claim");
      verdicts.push_back(v);
    }
    const auto res = hqh_metrics(verdicts, samples);
    ASSERT_LE(res.overall.main_hal_pct, res.overall.overall_hal_pct);
    for (const auto& [d, agg] : res.per_dimension) ASSERT_LE(agg.main_hal_pct, agg.overall_hal_pct);
    for (const auto& [l, agg] : res.per_level) ASSERT_LE(agg.main_hal_pct, agg.overall_hal_pct);
    ASSERT_GE(res.overall.overall_hal_pct, 0.0);
    ASSERT_LE(res.overall.overall_hal_pct, 1.0);
  }
}

TEST(Hqh, CoverageAndConsistency) {
  const std::vector<Sample> samples{Sample{"a", "img", "f", "q", FreeFormTruth{"x"}, Dimension::color, {}}};
  JudgeVerdict v{"a", "m", true, {}, 0, ""};
  EXPECT_EQ(code_of([&] { hqh_metrics({v, v}, samples); }), Errc::CoverageGap);
  EXPECT_EQ(code_of([&] { hqh_metrics({}, samples); }), Errc::CoverageGap);
  v.extra_claim_count = 2;
  EXPECT_EQ(code_of([&] { hqh_metrics({v}, samples); }), Errc::SchemaViolation);
}
