#include <gtest/gtest.h>

#include "hqm/quality.hpp"
#include "test_util.hpp"

using namespace hqm;
using namespace hqm::quality;
using hqm::testing::code_of;
using hqm::testing::fixture;

namespace {

// POPE accuracy and its parallel form, four models.
ScoreTable pope() {
  return {"pope", "original", "accuracy", Orientation::higher_better,
          {{"MiniGPT4-Llama2", 0.548}, {"Otter", 0.661}, {"MiniGPT4-Vicuna-7B", 0.548}, {"Qwen-VL-7B", 0.791}},
          std::nullopt};
}

ScoreTable pope_p() {
  return {"pope-p", "parallel", "accuracy", Orientation::higher_better,
          {{"MiniGPT4-Llama2", 0.463}, {"Otter", 0.461}, {"MiniGPT4-Vicuna-7B", 0.497}, {"Qwen-VL-7B", 0.500}},
          std::nullopt};
}

AnnotationRecord content(const std::string& sid, Label l, const std::string& who = "a1") {
  return {"ann-" + sid + who, who, Queue::content_validity, {sid, std::nullopt, std::nullopt}, l, std::nullopt, "t"};
}

AnnotationRecord criterion(const std::string& sid, const std::string& model, Label l, const std::string& who = "a1") {
  return {"c-" + sid + model + who, who, Queue::criterion, {sid, model, "r"}, l, std::nullopt, "t"};
}

}  // namespace

TEST(Table2, ParallelFormsBelowPointNine) {
  const auto r = parallel_forms(pope(), pope_p());
  EXPECT_LT(r.r, 0.9);
  EXPECT_NEAR(r.r, 0.3579797, 1e-6);
  EXPECT_EQ(r.n, 4u);
  EXPECT_NEAR(parallel_forms(pope(), pope()).r, 1.0, 1e-9);
  EXPECT_EQ(test_retest(pope(), pope()).r, 1.0);
}

TEST(Table2, RankDeltas) {
  // Ties on 0.548 break by model id; Qwen-VL-7B keeps first place on both.
  const auto rows = leaderboard_delta(pope(), pope_p());
  std::map<std::string, std::pair<int, int>> ranks;
  for (const auto& r : rows) ranks[r.model_id] = {r.rank_a, r.rank_b};
  EXPECT_EQ(ranks.at("Qwen-VL-7B"), std::make_pair(1, 1));
  EXPECT_EQ(ranks.at("Otter"), std::make_pair(2, 4));
  EXPECT_EQ(ranks.at("MiniGPT4-Llama2"), std::make_pair(3, 3));
  EXPECT_EQ(ranks.at("MiniGPT4-Vicuna-7B"), std::make_pair(4, 2));
  for (const auto& r : rows) EXPECT_EQ(r.delta, r.rank_b - r.rank_a);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(),
                             [](const RankRow& a, const RankRow& b) { return a.model_id < b.model_id; }));
}

TEST(Reliability, Mismatches) {
  auto other = pope_p();
  other.metric_name = "chair";
  EXPECT_EQ(code_of([&] { test_retest(pope(), other); }), Errc::MetricMismatch);
  other = pope_p();
  other.orientation = Orientation::lower_better;
  EXPECT_EQ(code_of([&] { parallel_forms(pope(), other); }), Errc::MetricMismatch);
  other = pope_p();
  other.scores.erase("Otter");
  other.scores["LLaVA"] = 0.5;
  EXPECT_EQ(code_of([&] { test_retest(pope(), other); }), Errc::RosterMismatch);
  EXPECT_EQ(code_of([&] { leaderboard_delta(pope(), other); }), Errc::RosterMismatch);
  ScoreTable flat{"b", "r", "accuracy", Orientation::higher_better, {{"a", 0.5}, {"b", 0.5}}, std::nullopt};
  EXPECT_EQ(code_of([&] { test_retest(flat, flat); }), Errc::DegenerateVariance);
  ScoreTable one{"b", "r", "accuracy", Orientation::higher_better, {{"a", 0.5}}, std::nullopt};
  EXPECT_EQ(code_of([&] { test_retest(one, one); }), Errc::TooFewPoints);
}

TEST(ContentValidity, EightyFourOfHundred) {
  const auto ann = load_annotations(fixture("content_validity/annotations.jsonl"));
  ASSERT_EQ(ann.size(), 100u);
  std::vector<std::string> subset;
  for (const auto& a : ann) subset.push_back(a.target.sample_id);
  const auto cv = content_validity(ann, subset);
  EXPECT_EQ(cv.validity, 0.84);
  EXPECT_EQ(cv.n_valid, 84u);
  EXPECT_EQ(cv.n, 100u);
}

TEST(ContentValidity, MajorityTiesAndMissing) {
  const std::vector<AnnotationRecord> ann{
      content("s1", Label::valid, "a"),   content("s1", Label::valid, "b"), content("s1", Label::invalid, "c"),
      content("s2", Label::valid, "a"),   content("s2", Label::invalid, "b"),
      content("s3", Label::invalid, "a"),
  };
  const auto cv = content_validity(ann, {"s1", "s2", "s3"});
  EXPECT_EQ(cv.n_valid, 1u);
  EXPECT_DOUBLE_EQ(cv.validity, 1.0 / 3.0);
  try {
    content_validity(ann, {"s1", "s9"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingAnnotations);
    EXPECT_NE(std::string(e.what()).find("s9"), std::string::npos);
  }
}

TEST(CriterionValidity, OrientationMustAgree) {
  ScoreTable automatic{"b", "r", "overall_hal_pct", Orientation::lower_better, {{"a", 0.1}, {"b", 0.4}, {"c", 0.3}}, {}};
  ScoreTable human{"b", "human", "human_correct_rate", Orientation::higher_better, {{"a", 0.9}, {"b", 0.5}, {"c", 0.8}}, {}};
  EXPECT_EQ(code_of([&] { criterion_validity(automatic, human); }), Errc::OrientationMismatch);
  const auto flipped = reorient(human);
  EXPECT_EQ(flipped.orientation, Orientation::lower_better);
  EXPECT_NEAR(flipped.scores.at("a"), 0.1, 1e-12);
  EXPECT_NEAR(criterion_validity(automatic, flipped).r, 0.8910421112136306, 1e-12);
  ScoreTable counts{"b", "r", "extra_num_hal", Orientation::lower_better, {{"a", 3}}, {}};
  EXPECT_EQ(code_of([&] { reorient(counts); }), Errc::InvalidArgument);
}

TEST(CriterionValidity, HumanScoresFromLabels) {
  std::vector<ModelResponse> rs;
  for (const auto* m : {"m1", "m2"})
    for (const auto* s : {"s1", "s2"}) rs.push_back({s, m, "r", 0, "text", std::nullopt, ""});
  const std::vector<AnnotationRecord> ann{
      criterion("s1", "m1", Label::hallucinated), criterion("s2", "m1", Label::clean),
      criterion("s1", "m2", Label::clean, "a"),   criterion("s1", "m2", Label::hallucinated, "b"),
      criterion("s2", "m2", Label::clean),
  };
  const auto low = human_scores_from_annotations(ann, rs, Orientation::lower_better, "b");
  EXPECT_EQ(low.metric_name, "human_hal_rate");
  EXPECT_DOUBLE_EQ(low.scores.at("m1"), 0.5);
  EXPECT_DOUBLE_EQ(low.scores.at("m2"), 0.5);  // the 1-1 tie counts as hallucinated
  const auto high = human_scores_from_annotations(ann, rs, Orientation::higher_better, "b");
  EXPECT_EQ(high.metric_name, "human_correct_rate");
  EXPECT_DOUBLE_EQ(high.scores.at("m1"), 0.5);
}

TEST(Report, UnavailableIndicatorText) {
  const auto i = Indicator<ContentValidity>::unavailable("no annotations");
  EXPECT_FALSE(i.available());
  EXPECT_EQ(i.reason(), "unavailable: no annotations");
  QualityReport r;
  r.benchmark_id = "b";
  r.metric_name = "accuracy";
  r.test_retest = Indicator<CorrelationResult>{CorrelationResult{1.0, 5}};
  r.parallel_forms = Indicator<CorrelationResult>::unavailable("x");
  r.content_validity = Indicator<ContentValidity>::unavailable("no annotations");
  r.criterion_validity = Indicator<CorrelationResult>::unavailable("no annotations");
  const auto j = to_json(r);
  EXPECT_EQ(j.dump().find("\"unavailable: no annotations\"") != std::string::npos, true);
  const auto md = render_markdown(r);
  EXPECT_NE(md.find("Test-retest"), std::string::npos);
  EXPECT_NE(md.find("unavailable: no annotations"), std::string::npos);
}
