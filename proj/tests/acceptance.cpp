// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails. Runs offline against the bundled fixtures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "hqm/annotate.hpp"
#include "hqm/benchgen.hpp"
#include "hqm/metrics.hpp"
#include "hqm/parallelforms.hpp"
#include "hqm/quality.hpp"
#include "hqm/runner.hpp"
#include "hqm/stats.hpp"
#include "hqm/text.hpp"

using namespace hqm;
namespace fs = std::filesystem;

namespace {

fs::path fixture(const std::string& rel) { return fs::path(HQM_FIXTURES) / rel; }

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("hqm-acceptance-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome pearson_oracle() {
  Outcome o;
  std::mt19937_64 g(1);
  std::uniform_int_distribution<int> len(2, 50);
  std::normal_distribution<double> z;
  double worst = 0;
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = len(g);
    std::vector<double> x(n), y(n);
    const double slope = z(g);
    for (int i = 0; i < n; ++i) {
      x[i] = 3 * z(g) + 1;
      y[i] = slope * x[i] + z(g);
    }
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    const double oracle = sxy / std::sqrt(sxx * syy);
    if (!std::isfinite(oracle)) continue;
    const double r = stats::pearson(x, y).r;
    worst = std::max(worst, std::abs(r - oracle));
    ++checked;

    std::vector<double> xa(n), yb(n);
    for (int i = 0; i < n; ++i) {
      xa[i] = 2.5 * x[i] - 7;
      yb[i] = 0.3 * y[i] + 11;
    }
    o.check(std::abs(stats::pearson(xa, yb).r - r) < 1e-10, "affine invariance, trial " + std::to_string(t));
    o.check(std::abs(stats::pearson(y, x).r - r) < 1e-12, "symmetry, trial " + std::to_string(t));
    if (!o.pass) break;
  }
  o.check(worst < 1e-10, "max |r - oracle| = " + fmt(worst));
  if (o.pass) o.detail = std::to_string(checked) + " pairs, max |r - oracle| = " + fmt(worst);
  return o;
}

Outcome replay_reliability() {
  Outcome o;
  ScratchDir dir;
  fs::copy(fixture("quality"), dir.path() / "quality", fs::copy_options::recursive);
  fs::remove_all(dir.path() / "quality/workspace");
  const auto manifest = dir.path() / "quality/manifest.ini";
  const auto report_path = dir.path() / "quality/workspace/runs/quality-fixture/quality_report.json";

  const auto a = runner::run_quality_suite(runner::RunManifest::load(manifest));
  const auto first = read_text(report_path);
  const auto b = runner::run_quality_suite(runner::RunManifest::load(manifest));
  const auto second = read_text(report_path);

  o.check(a.test_retest.available() && a.test_retest.get().r == 1.0, "test-retest r is not exactly 1.0");
  o.check(first == second, "quality_report.json differs between runs");
  o.check(runner::serialize_report(a) == runner::serialize_report(b), "serialized reports differ");
  if (o.pass) o.detail = "r = 1, " + std::to_string(first.size()) + "-byte reports identical";
  return o;
}

Outcome content_validity_exact() {
  Outcome o;
  const auto ann = load_annotations(fixture("content_validity/annotations.jsonl"));
  std::vector<std::string> subset;
  for (const auto& a : ann) subset.push_back(a.target.sample_id);
  const auto cv = quality::content_validity(ann, subset);
  o.check(ann.size() == 100, "fixture has " + std::to_string(ann.size()) + " annotations");
  o.check(cv.validity == 0.84, "validity = " + fmt(cv.validity));
  if (o.pass) o.detail = std::to_string(cv.n_valid) + "/" + std::to_string(cv.n) + " = 0.84";
  return o;
}

Outcome hqh_fixture() {
  Outcome o;
  const auto spec = load_benchmark(fixture("hqh/benchmark.jsonl"));
  const auto responses = load_responses(fixture("hqh/responses.jsonl"));
  runner::RunManifest m;
  Judge judge(JudgeConfig{.backend = "mock"}, std::make_shared<MockJudgeBackend>());
  const auto run = runner::run_hqh_eval(m, spec, responses, judge, "hqh-fixture");
  const auto& agg = run.per_model.at("fixture-model").overall;
  o.check(agg.main_hal_pct == 0.25, "Main Hal% = " + fmt(agg.main_hal_pct));
  o.check(agg.extra_num_hal == 0.5, "Extra #Hal = " + fmt(agg.extra_num_hal));
  o.check(agg.overall_hal_pct == 0.5, "Overall Hal% = " + fmt(agg.overall_hal_pct));

  std::mt19937_64 g(7);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = 1 + static_cast<int>(g() % 30);
    std::vector<Sample> samples;
    std::vector<JudgeVerdict> verdicts;
    for (int i = 0; i < n; ++i) {
      const auto id = "s" + std::to_string(i);
      samples.push_back({id, "img", "facts", "q", FreeFormTruth{"a"}, kAllDimensions[g() % 8], std::nullopt});
      JudgeVerdict v{id, "m", g() % 2 == 0, {}, 0, ""};
      v.extra_claim_count = static_cast<int>(g() % 3);
      v.extra_claims.assign(static_cast<std::size_t>(v.extra_claim_count), "claim");
      verdicts.push_back(v);
    }
    const auto res = metrics::hqh_metrics(verdicts, samples);
    violations += res.overall.main_hal_pct > res.overall.overall_hal_pct;
  }
  o.check(violations == 0, std::to_string(violations) + " sets with Main > Overall");
  if (o.pass) o.detail = "(0.25, 0.5, 0.5); Main <= Overall on 1000 random sets";
  return o;
}

Outcome table2_arithmetic() {
  Outcome o;
  const ScoreTable pope{"pope", "original", "accuracy", Orientation::higher_better,
                        {{"MiniGPT4-Llama2", 0.548}, {"Otter", 0.661}, {"MiniGPT4-Vicuna-7B", 0.548}, {"Qwen-VL-7B", 0.791}},
                        std::nullopt};
  const ScoreTable pope_p{"pope-p", "parallel", "accuracy", Orientation::higher_better,
                          {{"MiniGPT4-Llama2", 0.463}, {"Otter", 0.461}, {"MiniGPT4-Vicuna-7B", 0.497}, {"Qwen-VL-7B", 0.500}},
                          std::nullopt};
  const double r = quality::parallel_forms(pope, pope_p).r;
  const double self = quality::parallel_forms(pope, pope).r;
  o.check(r < 0.9, "parallel r = " + fmt(r));
  o.check(std::abs(self - 1.0) <= 1e-9, "(run, run) r = " + fmt(self));
  int qwen_a = 0, qwen_b = 0, qwen_delta = 0;
  for (const auto& row : quality::leaderboard_delta(pope, pope_p)) {
    if (row.model_id == "Qwen-VL-7B") {
      qwen_a = row.rank_a;
      qwen_b = row.rank_b;
      qwen_delta = row.delta;
    }
  }
  o.check(qwen_delta != 0, "Qwen-VL-7B rank " + std::to_string(qwen_a) + " -> " + std::to_string(qwen_b) +
                               " (0.500 is still the top parallel accuracy), delta 0");
  const std::string summary = "r = " + fmt(r) + ", (run, run) r = " + fmt(self);
  o.detail = o.pass ? summary : summary + "; " + o.detail;
  return o;
}

Outcome parallel_form_properties() {
  Outcome o;
  std::mt19937_64 g(99);
  TemplateParaphraser para;
  const char* objs[] = {"dog", "cat", "traffic light", "bus"};
  std::size_t samples = 0;
  for (int b = 0; b < 500 && o.pass; ++b) {
    BenchmarkSpec spec;
    spec.benchmark_id = "rand" + std::to_string(b);
    const int n = 1 + static_cast<int>(g() % 10);
    for (int i = 0; i < n; ++i) {
      Sample s;
      s.sample_id = "s" + std::to_string(i);
      s.image_ref = "img";
      const std::string obj = objs[g() % 4];
      switch (g() % 4) {
        case 0:
          s.instruction = (g() % 2 ? "Is there a " : "Are there ") + obj + " in the image?";
          s.ground_truth = YesNoTruth{g() % 2 == 0};
          break;
        case 1: {
          s.instruction = "Which color is the " + obj + "?";
          McqTruth m;
          const int k = 2 + static_cast<int>(g() % 4);
          for (int j = 0; j < k; ++j) m.options.push_back("choice " + std::to_string(j));
          m.correct_index = static_cast<int>(g() % k);
          s.ground_truth = m;
          break;
        }
        case 2:
          s.instruction = "Describe the image.";
          s.ground_truth = CaptionTruth{{obj}, std::nullopt};
          break;
        default:
          s.instruction = "What is the " + obj + " doing?";
          s.ground_truth = FreeFormTruth{"waiting at the \"corner\" "};
          break;
      }
      spec.samples.push_back(s);
    }
    samples += spec.samples.size();
    const auto seed = g();
    const auto [par, log] = build_parallel_benchmark(spec, seed, para);
    const auto again = build_parallel_benchmark(spec, seed, para);
    o.check(again.first == par && again.second == log, "not deterministic, benchmark " + std::to_string(b));
    o.check(par.samples.size() == spec.samples.size(), "samples dropped, benchmark " + std::to_string(b));
    if (!o.pass) break;
    for (std::size_t i = 0; i < spec.samples.size(); ++i) {
      const auto& src = spec.samples[i].ground_truth;
      const auto& dst = par.samples[i].ground_truth;
      const auto where = spec.benchmark_id + "/" + spec.samples[i].sample_id;
      if (const auto* yn = std::get_if<YesNoTruth>(&src)) {
        o.check(std::get<YesNoTruth>(dst).answer == !yn->answer, "yes/no not flipped at " + where);
      } else if (const auto* m = std::get_if<McqTruth>(&src)) {
        const auto& pm = std::get<McqTruth>(dst);
        o.check(pm.options[pm.correct_index] == m->options[m->correct_index], "correct option text changed at " + where);
        o.check(pm.options != m->options, "identity permutation at " + where);
      } else {
        o.check(to_json(dst).dump() == to_json(src).dump(), "ground truth bytes changed at " + where);
      }
    }
  }
  if (o.pass) o.detail = "500 benchmarks, " + std::to_string(samples) + " samples";
  return o;
}

Outcome chair_fixture() {
  Outcome o;
  const auto spec = load_benchmark(fixture("chair/benchmark.jsonl"));
  const auto lex = metrics::ObjectLexicon::load(fixture("chair/lexicon.json"));
  std::map<std::string, std::string> caps;
  for (const auto& r : load_responses(fixture("chair/responses.jsonl"))) caps[r.sample_id] = r.text;
  const auto res = metrics::chair(caps, spec.samples, lex);
  std::map<std::string, const metrics::ChairSample*> by_id;
  for (const auto& s : res.per_sample) by_id[s.sample_id] = &s;
  o.check(by_id.at("c1")->mentioned == 4 && by_id.at("c1")->chair == 0.25, "4-object caption is not 0.25");
  o.check(by_id.at("c2")->chair == 0.0, "all-gt caption is not 0");
  o.check(by_id.at("c3")->mentioned == 0 && !by_id.at("c3")->chair, "zero-mention caption got a value");
  auto without = caps;
  without.erase("c3");
  const double corpus_without = metrics::chair(without, spec.samples, lex).chair;
  o.check(res.chair == corpus_without, "zero-mention caption changed the corpus value");
  if (o.pass) o.detail = "0.25 / 0 / excluded; corpus " + fmt(res.chair) + " with or without the empty caption";
  return o;
}

Outcome benchgen_determinism() {
  Outcome o;
  const auto graphs = benchgen::load_scene_graphs(fixture("scene_graphs.json"));
  const auto serialize = [](const std::vector<benchgen::CandidateSample>& cs) {
    std::string out;
    for (const auto& c : cs) out += to_json(c).dump() + "\n";
    return out;
  };
  auto a = benchgen::generate_all(graphs, benchgen::GeneratorKind::template_based);
  const auto b = benchgen::generate_all(graphs, benchgen::GeneratorKind::template_based);
  o.check(graphs.size() == 20, std::to_string(graphs.size()) + " scene graphs");
  o.check(serialize(a) == serialize(b), "candidate generation differs between runs");
  benchgen::auto_approve(a);
  std::map<Dimension, std::size_t> quota;
  for (const auto d : kAllDimensions) quota[d] = 2;
  const auto spec = benchgen::export_benchmark(a, quota, 0);
  o.check(spec.samples.size() == 16, std::to_string(spec.samples.size()) + " samples exported");
  for (const auto& s : spec.samples) {
    o.check(!text::starts_with_yes_no_stem(s.instruction), "yes/no stem: " + s.instruction);
  }
  o.check(serialize_benchmark(spec) == serialize_benchmark(benchgen::export_benchmark(a, quota, 0)),
          "export differs between runs");
  if (o.pass) o.detail = std::to_string(a.size()) + " candidates, 16 exported";
  return o;
}

Outcome event_sourcing_replay() {
  Outcome o;
  ScratchDir dir;
  const auto spec = load_benchmark(fixture("quality/benchmark.jsonl"));
  auto tasks = annotate::content_tasks(spec);
  const auto cr = annotate::criterion_tasks(spec, load_responses(fixture("quality/responses/good-13b.original.jsonl")));
  tasks.insert(tasks.end(), cr.begin(), cr.end());
  std::int64_t now = 1'700'000'000'000;
  annotate::StoreOptions opts;
  opts.lease_ttl = std::chrono::seconds(60);
  const auto log = dir.path() / "log.jsonl";
  annotate::AnnotationStore live(tasks, log, opts, [&] { return now; });

  std::mt19937_64 g(2024);
  const std::string people[] = {"a", "b", "c"};
  std::map<std::string, std::string> held;
  int conservation_breaks = 0, submitted = 0;
  for (int op = 0; op < 200; ++op) {
    const auto& who = people[g() % 3];
    const auto queue = g() % 2 ? Queue::content_validity : Queue::criterion;
    switch (g() % 4) {
      case 0:
      case 1:
        if (const auto l = live.next_task(who, queue)) held[who] = l->task_id;
        break;
      case 2:
        if (const auto it = held.find(who); it != held.end()) {
          const bool cv = it->second.starts_with("cv:");
          try {
            live.submit_label(it->second, who, cv ? Label::valid : Label::clean);
            ++submitted;
          } catch (const Error& e) {
            if (e.code() != Errc::LeaseExpired && e.code() != Errc::LeaseNotHeld) throw;
          }
          held.erase(it);
        }
        break;
      default:
        now += static_cast<std::int64_t>(g() % 90'000);
        break;
    }
    for (const auto q : {Queue::content_validity, Queue::criterion}) {
      const auto p = live.progress(q);
      conservation_breaks += p.labeled + p.leased + p.remaining != p.total;
    }
  }
  now += 3'600'000;
  annotate::AnnotationStore rebuilt(tasks, log, opts, [&] { return now; });
  o.check(conservation_breaks == 0, std::to_string(conservation_breaks) + " progress snapshots did not conserve");
  o.check(rebuilt.label_state() == live.label_state(), "replayed label state differs from live state");
  o.check(annotate::AnnotationStore::replay(tasks, load_annotations(log)) == live.label_state(),
          "static replay differs from live state");
  for (const auto q : {Queue::content_validity, Queue::criterion}) {
    o.check(rebuilt.progress(q) == live.progress(q), "progress differs for " + std::string(to_string(q)));
  }
  o.check(static_cast<int>(live.record_count()) == submitted, "record count differs from accepted submissions");
  if (o.pass) o.detail = "200 operations, " + std::to_string(submitted) + " labels replayed";
  return o;
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"pearson_oracle_equivalence", 5, pearson_oracle},
      {"replay_reliability", 30, replay_reliability},
      {"content_validity_exactness", 1, content_validity_exact},
      {"hqh_metric_fixture", 5, hqh_fixture},
      {"table2_arithmetic_replication", 1, table2_arithmetic},
      {"parallel_form_properties", 10, parallel_form_properties},
      {"chair_fixture", 1, chair_fixture},
      {"benchgen_determinism_and_quota", 5, benchgen_determinism},
      {"event_sourcing_replay", 10, event_sourcing_replay},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += (o.detail.empty() ? "" : "; ") + std::string("took ") + fmt(secs) + " s, budget " + fmt(c.budget_s) + " s";
    }
    failures += !o.pass;
    std::printf("%s %s (%.3f s) %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
