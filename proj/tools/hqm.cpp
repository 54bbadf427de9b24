// hqm: benchmark quality toolkit command line.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "hqm/annotate.hpp"
#include "hqm/benchgen.hpp"
#include "hqm/config.hpp"
#include "hqm/datamodel.hpp"
#include "hqm/error.hpp"
#include "hqm/judge.hpp"
#include "hqm/parallelforms.hpp"
#include "hqm/quality.hpp"
#include "hqm/report.hpp"
#include "hqm/runner.hpp"
#include "hqm/text.hpp"

namespace fs = std::filesystem;
using namespace hqm;

namespace {

struct Common {
  std::string workspace;
  std::optional<std::int64_t> seed;
  std::optional<std::size_t> concurrency;
  std::string judge_config;
  std::string format = "markdown";
};

void add_common(CLI::App* app, Common& c, bool with_format = false) {
  app->add_option("--workspace", c.workspace, "Workspace directory (overrides the manifest)");
  app->add_option("--seed", c.seed, "Run seed (overrides the manifest)");
  app->add_option("--concurrency", c.concurrency, "Parallel requests")->check(CLI::PositiveNumber);
  app->add_option("--judge-config", c.judge_config, "Key-value file with a [judge] section");
  if (with_format) {
    app->add_option("--format", c.format, "json|csv|markdown")->check(CLI::IsMember({"json", "csv", "markdown"}));
  }
}

JudgeConfig judge_from_file(const std::string& path) {
  if (path.empty()) {
    JudgeConfig c;
    c.backend = "mock";
    return c;
  }
  return judge_config_from(Config::load(path), "judge");
}

runner::RunManifest manifest_with(const std::string& path, const Common& c) {
  auto m = runner::RunManifest::load(path);
  if (!c.workspace.empty()) m.workspace = c.workspace;
  if (c.seed) m.seed = *c.seed;
  if (c.concurrency) m.concurrency = *c.concurrency;
  if (!c.judge_config.empty()) m.judge = judge_config_from(Config::load(c.judge_config), "judge");
  m.validate();
  return m;
}

std::map<Dimension, std::size_t> parse_quota(const std::string& spec) {
  std::map<Dimension, std::size_t> quota;
  if (spec.find('=') == std::string::npos) {
    const auto n = std::stoul(spec);
    for (const auto d : kAllDimensions) quota[d] = n;
    return quota;
  }
  std::istringstream in(spec);
  for (std::string item; std::getline(in, item, ',');) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(Errc::InvalidArgument, "quota", "expected dim=n, got " + item);
    quota[parse_dimension(text::trim(item.substr(0, eq)))] = std::stoul(item.substr(eq + 1));
  }
  return quota;
}

void print_collect(const runner::CollectResult& r) {
  std::cout << "responses: " << r.responses.size() << "\n"
            << "cache hits: " << r.stats.cache_hits << "\n"
            << "cache misses: " << r.stats.cache_misses << "\n"
            << "network calls: " << r.stats.network_calls << "\n"
            << "file rows: " << r.stats.file_rows << "\n";
  for (const auto& g : r.coverage_gaps) std::cout << "coverage gap: " << g << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hallucination benchmark quality toolkit"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error")->default_val("warn");

  // bench --------------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "Benchmark files");
  bench->require_subcommand(1);

  std::string bench_file;
  auto* validate_cmd = bench->add_subcommand("validate", "Check a benchmark JSONL file");
  validate_cmd->add_option("file", bench_file, "Benchmark JSONL")->required();

  Common pf_common;
  std::string pf_out, pf_log, pf_paraphraser = "template";
  auto* pf_cmd = bench->add_subcommand("parallel-form", "Build the parallel-form benchmark");
  pf_cmd->add_option("file", bench_file, "Benchmark JSONL")->required();
  pf_cmd->add_option("--out", pf_out, "Output benchmark JSONL")->required();
  pf_cmd->add_option("--log", pf_log, "Transform log JSONL");
  pf_cmd->add_option("--paraphraser", pf_paraphraser)->check(CLI::IsMember({"template", "llm"}));
  add_common(pf_cmd, pf_common);

  // run ----------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Evaluation runs");
  run->require_subcommand(1);
  std::string manifest_path;
  Common run_common;
  std::string variant = "original";

  auto* collect_cmd = run->add_subcommand("collect", "Collect model responses");
  collect_cmd->add_option("--manifest", manifest_path)->required();
  collect_cmd->add_option("--variant", variant)->check(CLI::IsMember({"original", "retest"}));
  add_common(collect_cmd, run_common);

  auto* hqh_cmd = run->add_subcommand("hqh", "Judge free-form responses (Main/Extra/Overall)");
  hqh_cmd->add_option("--manifest", manifest_path)->required();
  add_common(hqh_cmd, run_common, true);

  auto* quality_cmd = run->add_subcommand("quality", "Reliability and validity report");
  quality_cmd->add_option("--manifest", manifest_path)->required();
  add_common(quality_cmd, run_common, true);

  // report -------------------------------------------------------------------
  auto* report_cmd = app.add_subcommand("report", "Leaderboards");
  report_cmd->require_subcommand(1);
  std::vector<std::string> table_files;
  std::string report_out;
  Common report_common;
  auto* emit_cmd = report_cmd->add_subcommand("emit", "Render score tables");
  emit_cmd->add_option("--tables", table_files, "ScoreTable JSONL files")->required();
  emit_cmd->add_option("--out", report_out, "Output file (stdout when omitted)");
  add_common(emit_cmd, report_common, true);

  // gen ----------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Benchmark generation from scene graphs");
  gen->require_subcommand(1);
  std::string graphs_file, gen_out, gen_dimension = "all", generator = "template", candidates_file, reviews_file,
                                    quota = "500", benchmark_id = "hqh";
  bool auto_approve = false;
  Common gen_common;

  auto* extract_cmd = gen->add_subcommand("extract", "Extract facts");
  extract_cmd->add_option("--scene-graphs", graphs_file)->required();
  extract_cmd->add_option("--dimension", gen_dimension);
  extract_cmd->add_option("--out", gen_out);

  auto* cand_cmd = gen->add_subcommand("candidates", "Generate candidate samples");
  cand_cmd->add_option("--scene-graphs", graphs_file)->required();
  cand_cmd->add_option("--generator", generator)->check(CLI::IsMember({"template", "llm"}));
  cand_cmd->add_option("--out", gen_out)->required();
  cand_cmd->add_flag("--auto-approve", auto_approve, "Approve every candidate (fixture mode)");
  add_common(cand_cmd, gen_common);

  auto* export_cmd = gen->add_subcommand("export", "Export approved candidates as a benchmark");
  export_cmd->add_option("--candidates", candidates_file)->required();
  export_cmd->add_option("--reviews", reviews_file, "content_validity annotation log");
  export_cmd->add_option("--quota", quota, "N per dimension, or dim=n,dim=n");
  export_cmd->add_option("--id", benchmark_id);
  export_cmd->add_option("--out", gen_out)->required();
  add_common(export_cmd, gen_common);

  // annotate -----------------------------------------------------------------
  auto* annotate = app.add_subcommand("annotate", "Annotation service");
  annotate->require_subcommand(1);
  std::string ann_benchmark, ann_responses, ann_log = "annotations.jsonl", ann_host = "127.0.0.1", ann_static;
  int ann_port = 8080;
  int ann_ttl_min = 10;
  std::size_t ann_k = 1;
  auto* serve_cmd = annotate->add_subcommand("serve", "Serve the labeling API");
  serve_cmd->add_option("--benchmark", ann_benchmark)->required();
  serve_cmd->add_option("--responses", ann_responses, "Responses for the criterion queue");
  serve_cmd->add_option("--log", ann_log, "Append-only annotation log");
  serve_cmd->add_option("--host", ann_host);
  serve_cmd->add_option("--port", ann_port);
  serve_cmd->add_option("--static", ann_static, "Static UI bundle directory");
  serve_cmd->add_option("--lease-ttl-min", ann_ttl_min)->check(CLI::PositiveNumber);
  serve_cmd->add_option("--annotations-per-task", ann_k)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (validate_cmd->parsed()) {
      const auto spec = load_benchmark(bench_file);
      std::cout << "ok: " << spec.benchmark_id << " " << to_string(spec.task_type) << " " << spec.samples.size()
                << " samples\n";
    } else if (pf_cmd->parsed()) {
      const auto spec = load_benchmark(bench_file);
      std::shared_ptr<const Judge> judge;
      std::unique_ptr<Paraphraser> para;
      if (pf_paraphraser == "llm") {
        const auto jc = judge_from_file(pf_common.judge_config);
        judge = std::make_shared<const Judge>(jc, make_backend(jc));
        para = std::make_unique<LlmParaphraser>(judge);
      } else {
        para = std::make_unique<TemplateParaphraser>();
      }
      const auto [pspec, log] = build_parallel_benchmark(
          spec, static_cast<std::uint64_t>(pf_common.seed.value_or(0)), *para,
          ParallelBuildOptions{pf_common.concurrency.value_or(1), 0.01});
      save_benchmark(pspec, pf_out);
      if (!pf_log.empty()) save_transform_log(log, pf_log);
      std::cout << "wrote " << pspec.samples.size() << " samples to " << pf_out << "\n";
    } else if (collect_cmd->parsed()) {
      const auto m = manifest_with(manifest_path, run_common);
      const auto spec = load_benchmark(m.benchmark);
      const auto v = variant == "retest" ? runner::Variant::retest : runner::Variant::original;
      const auto seed = v == runner::Variant::retest ? m.effective_retest_seed() : m.seed;
      const auto res = runner::collect_responses(m, spec, seed, v, runner::default_backend_factory(m));
      const auto out = m.workspace / "runs" / m.run_id / ("responses." + std::string(to_string(v)) + ".jsonl");
      save_responses(res.responses, out);
      print_collect(res);
      std::cout << "wrote " << out.string() << "\n";
    } else if (hqh_cmd->parsed()) {
      const auto m = manifest_with(manifest_path, run_common);
      const auto spec = load_benchmark(m.benchmark);
      const auto res = runner::collect_responses(m, spec, m.seed, runner::Variant::original,
                                                 runner::default_backend_factory(m));
      for (const auto& g : res.coverage_gaps) std::cerr << "coverage gap: " << g << "\n";
      const auto judge = make_judge(m.judge);
      const auto hqh = runner::run_hqh_eval(m, spec, res.responses, judge,
                                            runner::variant_run_id(m, runner::Variant::original));
      const auto dir = m.workspace / "runs" / m.run_id;
      std::vector<json> lines;
      for (const auto& v : hqh.verdicts) lines.push_back(to_json(v));
      write_jsonl(lines, dir / "verdicts.jsonl");
      save_score_tables(hqh.tables, dir / "scores.hqh.jsonl");
      for (const auto& n : hqh.notes) std::cerr << n << "\n";
      std::cout << report::render(hqh.tables, report::parse_format(run_common.format));
    } else if (quality_cmd->parsed()) {
      const auto m = manifest_with(manifest_path, run_common);
      const auto rep = runner::run_quality_suite(m);
      if (run_common.format == "json") {
        std::cout << runner::serialize_report(rep);
      } else if (run_common.format == "csv") {
        std::vector<ScoreTable> tables;
        for (const auto& [_, t] : rep.score_tables) tables.push_back(t);
        std::cout << report::render(tables, report::Format::csv);
      } else {
        std::cout << quality::render_markdown(rep);
      }
    } else if (emit_cmd->parsed()) {
      std::vector<ScoreTable> tables;
      for (const auto& f : table_files) {
        auto t = load_score_tables(f);
        tables.insert(tables.end(), t.begin(), t.end());
      }
      const auto fmt = report::parse_format(report_common.format);
      if (report_out.empty()) {
        std::cout << report::render(tables, fmt);
      } else {
        report::emit_report(tables, fmt, report_out);
      }
    } else if (extract_cmd->parsed()) {
      const auto graphs = benchgen::load_scene_graphs(graphs_file);
      const auto lex = benchgen::Lexicons::bundled();
      std::vector<json> lines;
      for (const auto& g : graphs) {
        for (const auto d : kAllDimensions) {
          if (gen_dimension != "all" && parse_dimension(gen_dimension) != d) continue;
          for (const auto& f : benchgen::extract_facts(g, d, lex)) lines.push_back(benchgen::to_json(f));
        }
      }
      if (gen_out.empty()) {
        for (const auto& l : lines) std::cout << l.dump() << "\n";
      } else {
        write_jsonl(lines, gen_out);
      }
    } else if (cand_cmd->parsed()) {
      const auto graphs = benchgen::load_scene_graphs(graphs_file);
      std::optional<Judge> judge;
      const auto kind = generator == "llm" ? benchgen::GeneratorKind::llm : benchgen::GeneratorKind::template_based;
      if (kind == benchgen::GeneratorKind::llm) judge.emplace(make_judge(judge_from_file(gen_common.judge_config)));
      benchgen::GenerationLog log;
      auto cands = benchgen::generate_all(graphs, kind, benchgen::Lexicons::bundled(), judge ? &*judge : nullptr, &log);
      if (auto_approve) benchgen::auto_approve(cands);
      benchgen::save_candidates(cands, gen_out);
      for (const auto& f : log.failures) std::cerr << "generation failure: " << f << "\n";
      std::cout << "wrote " << cands.size() << " candidates to " << gen_out << "\n";
    } else if (export_cmd->parsed()) {
      auto cands = benchgen::load_candidates(candidates_file);
      if (!reviews_file.empty()) benchgen::apply_reviews(cands, load_annotations(reviews_file));
      const auto spec = benchgen::export_benchmark(cands, parse_quota(quota),
                                                   static_cast<std::uint64_t>(gen_common.seed.value_or(0)), benchmark_id);
      save_benchmark(spec, gen_out);
      std::cout << "wrote " << spec.samples.size() << " samples to " << gen_out << "\n";
    } else if (serve_cmd->parsed()) {
      const auto spec = load_benchmark(ann_benchmark);
      auto tasks = annotate::content_tasks(spec);
      if (!ann_responses.empty()) {
        auto crit = annotate::criterion_tasks(spec, load_responses(ann_responses));
        tasks.insert(tasks.end(), crit.begin(), crit.end());
      }
      annotate::StoreOptions opts;
      opts.lease_ttl = std::chrono::minutes(ann_ttl_min);
      opts.annotations_per_task = ann_k;
      annotate::AnnotationStore store(std::move(tasks), ann_log, opts);
      httplib::Server server;
      std::optional<fs::path> static_dir;
      if (!ann_static.empty()) static_dir = ann_static;
      annotate::register_routes(server, store, static_dir);
      spdlog::info("listening on {}:{}", ann_host, ann_port);
      std::cout << "serving on http://" << ann_host << ":" << ann_port << std::endl;
      if (!server.listen(ann_host, ann_port)) throw Error(Errc::Io, ann_host + ":" + std::to_string(ann_port), "listen failed");
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
