#include "hqm/quality.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "hqm/error.hpp"

namespace hqm::quality {

namespace {

void require_same_roster(const ScoreTable& a, const ScoreTable& b) {
  if (a.scores.size() != b.scores.size() ||
      !std::equal(a.scores.begin(), a.scores.end(), b.scores.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    std::string diff;
    for (const auto& [m, _] : a.scores) {
      if (!b.scores.count(m)) diff += (diff.empty() ? "" : ",") + ("-" + m);
    }
    for (const auto& [m, _] : b.scores) {
      if (!a.scores.count(m)) diff += (diff.empty() ? "" : ",") + ("+" + m);
    }
    throw Error(Errc::RosterMismatch, diff);
  }
}

std::pair<std::vector<double>, std::vector<double>> aligned(const ScoreTable& a, const ScoreTable& b) {
  require_same_roster(a, b);
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& [model, score] : a.scores) {
    x.push_back(score);
    y.push_back(b.scores.at(model));
  }
  return {std::move(x), std::move(y)};
}

CorrelationResult same_metric_correlation(const ScoreTable& a, const ScoreTable& b) {
  if (a.metric_name != b.metric_name) throw Error(Errc::MetricMismatch, a.metric_name + " vs " + b.metric_name);
  if (a.orientation != b.orientation) {
    throw Error(Errc::MetricMismatch, "orientation",
                std::string(to_string(a.orientation)) + " vs " + std::string(to_string(b.orientation)));
  }
  const auto [x, y] = aligned(a, b);
  return stats::pearson(x, y);
}

struct Tally {
  std::size_t positive = 0;  // valid / clean
  std::size_t negative = 0;  // invalid / hallucinated
};

bool majority_positive(const Tally& t) { return t.positive > t.negative; }

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

CorrelationResult test_retest(const ScoreTable& run1, const ScoreTable& run2) {
  return same_metric_correlation(run1, run2);
}

CorrelationResult parallel_forms(const ScoreTable& run, const ScoreTable& run_parallel) {
  return same_metric_correlation(run, run_parallel);
}

ContentValidity content_validity(const std::vector<AnnotationRecord>& annotations,
                                 const std::vector<std::string>& subset) {
  std::map<std::string, Tally> tallies;
  for (const auto& a : annotations) {
    if (a.queue != Queue::content_validity) continue;
    auto& t = tallies[a.target.sample_id];
    if (a.label == Label::valid) {
      ++t.positive;
    } else {
      ++t.negative;
    }
  }
  ContentValidity out;
  std::vector<std::string> missing;
  std::set<std::string> seen;
  for (const auto& id : subset) {
    if (!seen.insert(id).second) continue;
    const auto it = tallies.find(id);
    if (it == tallies.end()) {
      missing.push_back(id);
      continue;
    }
    ++out.n;
    if (majority_positive(it->second)) ++out.n_valid;
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& m : missing) joined += (joined.empty() ? "" : ",") + m;
    throw Error(Errc::MissingAnnotations, joined);
  }
  if (out.n == 0) throw Error(Errc::EmptySet, "subset");
  out.validity = static_cast<double>(out.n_valid) / static_cast<double>(out.n);
  return out;
}

CorrelationResult criterion_validity(const ScoreTable& automatic, const ScoreTable& human) {
  if (automatic.orientation != human.orientation) {
    throw Error(Errc::OrientationMismatch, std::string(to_string(automatic.orientation)) + " vs " +
                                               std::string(to_string(human.orientation)));
  }
  const auto [x, y] = aligned(automatic, human);
  return stats::pearson(x, y);
}

ScoreTable human_scores_from_annotations(const std::vector<AnnotationRecord>& annotations,
                                         const std::vector<ModelResponse>& responses, Orientation orientation,
                                         const std::string& benchmark_id, const std::string& run_id) {
  std::map<AnnotationTarget, Tally> tallies;
  for (const auto& a : annotations) {
    if (a.queue != Queue::criterion) continue;
    auto& t = tallies[a.target];
    if (a.label == Label::clean) {
      ++t.positive;
    } else {
      ++t.negative;
    }
  }
  std::map<std::string, Tally> per_model;
  std::vector<std::string> missing;
  for (const auto& r : responses) {
    const AnnotationTarget key{r.sample_id, r.model_id, r.run_id};
    const auto it = tallies.find(key);
    if (it == tallies.end()) {
      missing.push_back(r.sample_id + "/" + r.model_id + "/" + r.run_id);
      continue;
    }
    auto& m = per_model[r.model_id];
    if (majority_positive(it->second)) {
      ++m.positive;
    } else {
      ++m.negative;
    }
  }
  if (!missing.empty()) {
    std::string joined;
    for (const auto& m : missing) joined += (joined.empty() ? "" : ",") + m;
    throw Error(Errc::MissingAnnotations, joined);
  }
  ScoreTable t;
  t.benchmark_id = benchmark_id;
  t.run_id = run_id;
  t.orientation = orientation;
  t.metric_name = orientation == Orientation::lower_better ? "human_hal_rate" : "human_correct_rate";
  for (const auto& [model, tally] : per_model) {
    const double rate = static_cast<double>(tally.negative) / static_cast<double>(tally.positive + tally.negative);
    t.scores[model] = orientation == Orientation::lower_better ? rate : 1.0 - rate;
  }
  return t;
}

ScoreTable reorient(const ScoreTable& table) {
  if (!is_rate_metric(table.metric_name)) {
    throw Error(Errc::InvalidArgument, table.metric_name, "only rate metrics can be reoriented");
  }
  ScoreTable out = table;
  out.orientation =
      table.orientation == Orientation::higher_better ? Orientation::lower_better : Orientation::higher_better;
  out.metric_name = table.metric_name + "_reoriented";
  for (auto& [_, v] : out.scores) v = 1.0 - v;
  if (out.per_dimension) {
    for (auto& [_, row] : *out.per_dimension) {
      for (auto& [__, v] : row) v = 1.0 - v;
    }
  }
  return out;
}

std::map<std::string, int> ranks(const ScoreTable& table) {
  std::vector<std::pair<std::string, double>> rows(table.scores.begin(), table.scores.end());
  const bool higher = table.orientation == Orientation::higher_better;
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return higher ? a.second > b.second : a.second < b.second;
    return a.first < b.first;
  });
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < rows.size(); ++i) out[rows[i].first] = static_cast<int>(i + 1);
  return out;
}

std::vector<RankRow> leaderboard_delta(const ScoreTable& run_a, const ScoreTable& run_b) {
  require_same_roster(run_a, run_b);
  const auto ra = ranks(run_a);
  const auto rb = ranks(run_b);
  std::vector<RankRow> out;
  for (const auto& [model, score] : run_a.scores) {
    RankRow row;
    row.model_id = model;
    row.score_a = score;
    row.score_b = run_b.scores.at(model);
    row.rank_a = ra.at(model);
    row.rank_b = rb.at(model);
    row.delta = row.rank_b - row.rank_a;
    out.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

json to_json(const ContentValidity& c) {
  return {{"validity", c.validity}, {"n_valid", c.n_valid}, {"n", c.n}};
}

json to_json(const RankRow& r) {
  return {{"model_id", r.model_id}, {"score_a", r.score_a}, {"score_b", r.score_b},
          {"rank_a", r.rank_a},     {"rank_b", r.rank_b},   {"delta", r.delta}};
}

namespace {

json correlation_json(const Indicator<CorrelationResult>& ind) {
  if (!ind.available()) return ind.reason();
  return {{"r", ind.get().r}, {"n", ind.get().n}};
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string cell(const Indicator<CorrelationResult>& ind) { return ind.available() ? fmt3(ind.get().r) : "n/a"; }

}  // namespace

json to_json(const QualityReport& r) {
  json tables = json::object();
  for (const auto& [k, t] : r.score_tables) tables[k] = to_json(t);
  json diag = json::object();
  for (const auto& [model, d] : r.diagnostics) {
    json row{{"yes_ratio", opt(d.yes_ratio)},
             {"yes_ratio_parallel", opt(d.yes_ratio_parallel)},
             {"avg_length", opt(d.avg_length)},
             {"avg_length_parallel", opt(d.avg_length_parallel)}};
    if (d.unparsed) row["unparsed"] = *d.unparsed;
    if (d.unparsed_parallel) row["unparsed_parallel"] = *d.unparsed_parallel;
    diag[model] = row;
  }
  json retest = json::array();
  for (const auto& row : r.retest_rank_delta) retest.push_back(to_json(row));
  json parallel = json::array();
  for (const auto& row : r.parallel_rank_delta) parallel.push_back(to_json(row));

  return {
      {"benchmark_id", r.benchmark_id},
      {"metric_name", r.metric_name},
      {"orientation", to_string(r.orientation)},
      {"model_roster", r.model_roster},
      {"reliability",
       {{"test_retest", correlation_json(r.test_retest)}, {"parallel_forms", correlation_json(r.parallel_forms)}}},
      {"validity",
       {{"content", r.content_validity.available() ? to_json(r.content_validity.get()) : json(r.content_validity.reason())},
        {"criterion", correlation_json(r.criterion_validity)},
        {"criterion_orientation", r.criterion_orientation ? json(*r.criterion_orientation) : json(nullptr)},
        {"subset_seed", r.subset_seed},
        {"subset_size", r.subset_size}}},
      {"score_tables", tables},
      {"diagnostics", {{"per_model", diag}, {"retest_rank_delta", retest}, {"parallel_rank_delta", parallel}}},
      {"notes", r.notes},
      {"provenance", r.provenance},
  };
}

std::string render_markdown(const QualityReport& r) {
  std::string out = "# Quality report: " + r.benchmark_id + "\n\n";
  out += "Metric: `" + r.metric_name + "` (" + std::string(to_string(r.orientation)) + "), " +
         std::to_string(r.model_roster.size()) + " models\n\n";
  out += "| Benchmark | Test-retest | Parallel-forms | Content | Criterion |\n";
  out += "|---|---|---|---|---|\n";
  out += "| " + r.benchmark_id + " | " + cell(r.test_retest) + " | " + cell(r.parallel_forms) + " | " +
         (r.content_validity.available() ? fmt3(r.content_validity.get().validity) : "n/a") + " | " +
         cell(r.criterion_validity) + " |\n\n";

  auto reason = [&](const char* name, const std::string& why) { out += "- " + std::string(name) + ": " + why + "\n"; };
  bool any_missing = false;
  for (const auto* ind : {&r.test_retest, &r.parallel_forms, &r.criterion_validity}) {
    if (!ind->available()) any_missing = true;
  }
  if (!r.content_validity.available()) any_missing = true;
  if (any_missing) {
    out += "Unavailable indicators:\n\n";
    if (!r.test_retest.available()) reason("test-retest", r.test_retest.reason());
    if (!r.parallel_forms.available()) reason("parallel-forms", r.parallel_forms.reason());
    if (!r.content_validity.available()) reason("content", r.content_validity.reason());
    if (!r.criterion_validity.available()) reason("criterion", r.criterion_validity.reason());
    out += "\n";
  }
  if (r.content_validity.available()) {
    out += "Content validity: " + std::to_string(r.content_validity.get().n_valid) + " / " +
           std::to_string(r.content_validity.get().n) + " valid (subset seed " + std::to_string(r.subset_seed) + ")\n\n";
  }
  if (r.criterion_orientation) out += "Criterion scores oriented as: " + *r.criterion_orientation + "\n\n";

  if (!r.diagnostics.empty()) {
    out += "## Diagnostics\n\n| Model | Yes% | Yes% (parallel) | Avg len | Avg len (parallel) |\n|---|---|---|---|---|\n";
    auto o = [](const std::optional<double>& v) { return v ? fmt3(*v) : std::string("-"); };
    for (const auto& [model, d] : r.diagnostics) {
      out += "| " + model + " | " + o(d.yes_ratio) + " | " + o(d.yes_ratio_parallel) + " | " + o(d.avg_length) +
             " | " + o(d.avg_length_parallel) + " |\n";
    }
    out += "\n";
  }
  auto deltas = [&](const char* title, const std::vector<RankRow>& rows) {
    if (rows.empty()) return;
    out += std::string("## ") + title + "\n\n| Model | Score | Score' | Rank | Rank' | Delta |\n|---|---|---|---|---|---|\n";
    for (const auto& row : rows) {
      out += "| " + row.model_id + " | " + fmt3(row.score_a) + " | " + fmt3(row.score_b) + " | " +
             std::to_string(row.rank_a) + " | " + std::to_string(row.rank_b) + " | " +
             (row.delta > 0 ? "+" : "") + std::to_string(row.delta) + " |\n";
    }
    out += "\n";
  };
  deltas("Rank changes: retest", r.retest_rank_delta);
  deltas("Rank changes: parallel form", r.parallel_rank_delta);
  if (!r.notes.empty()) {
    out += "## Notes\n\n";
    for (const auto& n : r.notes) out += "- " + n + "\n";
  }
  return out;
}

}  // namespace hqm::quality
