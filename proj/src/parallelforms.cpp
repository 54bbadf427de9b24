#include "hqm/parallelforms.hpp"

#include <numeric>

#include "hqm/concurrency.hpp"
#include "hqm/error.hpp"
#include "hqm/judge.hpp"
#include "hqm/rewrite.hpp"
#include "hqm/rng.hpp"
#include "hqm/text.hpp"

namespace hqm {

std::string TemplateParaphraser::paraphrase(const std::string& text) const {
  return rewrite::template_paraphrase(text);
}

std::string TemplateParaphraser::negate(const std::string& question) const {
  if (auto out = rewrite::template_negate(question)) return *out;
  throw Error(Errc::ParaphraseFailure, question, "no negation template matches");
}

std::string LlmParaphraser::paraphrase(const std::string& text) const { return judge_->paraphrase(text); }

std::string LlmParaphraser::negate(const std::string& question) const { return judge_->negate(question); }

std::string_view to_string(TransformKind k) noexcept {
  switch (k) {
    case TransformKind::negate:
      return "negate";
    case TransformKind::shuffle_rephrase:
      return "shuffle_rephrase";
    case TransformKind::paraphrase:
      return "paraphrase";
    case TransformKind::failed:
      return "failed";
  }
  return "?";
}

namespace {

template <typename Fn>
std::string rewrite_with_retries(const std::string& original, Fn&& produce) {
  const auto source = text::trim(original);
  std::string last_error = "empty or unchanged text";
  for (int attempt = 0; attempt < kParaphraseAttempts; ++attempt) {
    try {
      auto out = text::trim(produce(original));
      if (!out.empty() && out != source) return out;
    } catch (const Error& e) {
      if (e.code() != Errc::ParaphraseFailure) throw;
      last_error = e.what();
    }
  }
  throw Error(Errc::ParaphraseFailure, original, last_error);
}

Sample parallel_copy(const Sample& sample) {
  Sample out = sample;
  out.sample_id = sample.sample_id + std::string(kParallelIdSuffix);
  return out;
}

}  // namespace

Sample negate_yes_no(const Sample& sample, const Paraphraser& paraphraser) {
  const auto* gt = std::get_if<YesNoTruth>(&sample.ground_truth);
  if (gt == nullptr) throw Error(Errc::InvalidArgument, sample.sample_id, "negate_yes_no needs a yes_no sample");
  Sample out = parallel_copy(sample);
  if (auto templated = rewrite::template_negate(sample.instruction);
      templated && text::trim(*templated) != text::trim(sample.instruction)) {
    out.instruction = *templated;
  } else {
    out.instruction = rewrite_with_retries(sample.instruction, [&](const std::string& s) { return paraphraser.negate(s); });
  }
  out.ground_truth = YesNoTruth{!gt->answer};
  return out;
}

std::vector<int> mcq_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  if (n < 2) return perm;
  SplitMix64 rng(seed);
  for (;;) {
    shuffle(perm, rng);
    bool identity = true;
    for (std::size_t i = 0; i < n && identity; ++i) identity = perm[i] == static_cast<int>(i);
    if (!identity) return perm;
    std::iota(perm.begin(), perm.end(), 0);
  }
}

Sample shuffle_mcq(const Sample& sample, std::uint64_t seed, const Paraphraser& paraphraser) {
  const auto* gt = std::get_if<McqTruth>(&sample.ground_truth);
  if (gt == nullptr) throw Error(Errc::InvalidArgument, sample.sample_id, "shuffle_mcq needs an mcq sample");
  if (gt->options.size() < 2) throw Error(Errc::SchemaViolation, "options", "need at least 2");
  const auto perm = mcq_permutation(gt->options.size(), seed);
  McqTruth shuffled;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.options.push_back(gt->options[static_cast<std::size_t>(perm[i])]);
    if (perm[i] == gt->correct_index) shuffled.correct_index = static_cast<int>(i);
  }
  Sample out = parallel_copy(sample);
  out.instruction = rewrite_with_retries(sample.instruction, [&](const std::string& s) { return paraphraser.paraphrase(s); });
  out.ground_truth = std::move(shuffled);
  return out;
}

Sample paraphrase_instruction(const Sample& sample, const Paraphraser& paraphraser) {
  const auto type = task_type_of(sample.ground_truth);
  if (type != TaskType::captioning && type != TaskType::free_form) {
    throw Error(Errc::InvalidArgument, sample.sample_id, "paraphrase_instruction needs captioning or free_form");
  }
  Sample out = parallel_copy(sample);
  out.instruction = rewrite_with_retries(sample.instruction, [&](const std::string& s) { return paraphraser.paraphrase(s); });
  return out;
}

std::pair<BenchmarkSpec, ParallelFormReport> build_parallel_benchmark(const BenchmarkSpec& spec, std::uint64_t seed,
                                                                      const Paraphraser& paraphraser,
                                                                      const ParallelBuildOptions& options) {
  const std::size_t n = spec.samples.size();
  std::vector<std::optional<Sample>> transformed(n);
  std::vector<TransformLogEntry> entries(n);

  parallel_for(n, options.concurrency, [&](std::size_t i) {
    const auto& s = spec.samples[i];
    auto& entry = entries[i];
    entry.sample_id = s.sample_id;
    entry.original_instruction = s.instruction;
    try {
      switch (task_type_of(s.ground_truth)) {
        case TaskType::yes_no:
          entry.transform_kind = TransformKind::negate;
          transformed[i] = negate_yes_no(s, paraphraser);
          entry.gt_changed = true;
          break;
        case TaskType::mcq: {
          entry.transform_kind = TransformKind::shuffle_rephrase;
          const auto sample_seed = derive_seed(seed, s.sample_id);
          transformed[i] = shuffle_mcq(s, sample_seed, paraphraser);
          entry.permutation = mcq_permutation(std::get<McqTruth>(s.ground_truth).options.size(), sample_seed);
          break;
        }
        case TaskType::captioning:
        case TaskType::free_form:
          entry.transform_kind = TransformKind::paraphrase;
          transformed[i] = paraphrase_instruction(s, paraphraser);
          break;
      }
      entry.new_instruction = transformed[i]->instruction;
    } catch (const Error& e) {
      if (e.code() != Errc::ParaphraseFailure) throw;
      transformed[i].reset();
      entry.transform_kind = TransformKind::failed;
      entry.gt_changed = false;
      entry.permutation.reset();
      entry.error = e.what();
    }
  });

  std::size_t failures = 0;
  BenchmarkSpec out;
  out.benchmark_id = spec.benchmark_id + std::string(kParallelBenchmarkSuffix);
  out.task_type = spec.task_type;
  out.metric_orientation = spec.metric_orientation;
  out.provenance = "parallel form of " + spec.benchmark_id + " (seed " + std::to_string(seed) + ", paraphraser " +
                   paraphraser.name() + ")";
  for (auto& t : transformed) {
    if (t) {
      out.samples.push_back(std::move(*t));
    } else {
      ++failures;
    }
  }
  if (n > 0 && static_cast<double>(failures) > options.max_failure_fraction * static_cast<double>(n)) {
    throw Error(Errc::TransformAbort, spec.benchmark_id,
                std::to_string(failures) + " of " + std::to_string(n) + " samples failed to transform");
  }

  ParallelFormReport report{spec.benchmark_id, seed, paraphraser.name(), std::move(entries)};
  return {std::move(out), std::move(report)};
}

json to_json(const TransformLogEntry& e) {
  json j{{"sample_id", e.sample_id},
         {"transform_kind", to_string(e.transform_kind)},
         {"original_instruction", e.original_instruction},
         {"new_instruction", e.new_instruction},
         {"gt_changed", e.gt_changed}};
  if (e.permutation) j["permutation"] = *e.permutation;
  if (e.error) j["error"] = *e.error;
  return j;
}

std::string serialize_transform_log(const ParallelFormReport& report) {
  std::string out = json{{"kind", "transform_log"},
                         {"benchmark_id", report.benchmark_id},
                         {"seed", report.seed},
                         {"paraphraser", report.paraphraser}}
                        .dump() +
                    "\n";
  for (const auto& e : report.entries) out += to_json(e).dump() + "\n";
  return out;
}

void save_transform_log(const ParallelFormReport& report, const std::filesystem::path& path) {
  write_text_atomic(serialize_transform_log(report), path);
}

std::string render_prompt(const Sample& sample) {
  const auto* mcq = std::get_if<McqTruth>(&sample.ground_truth);
  if (mcq == nullptr) return sample.instruction;
  std::string out = sample.instruction;
  for (std::size_t i = 0; i < mcq->options.size(); ++i) {
    out += "\n";
    out += static_cast<char>('A' + static_cast<int>(i % 26));
    out += ". " + mcq->options[i];
  }
  return out;
}

}  // namespace hqm
