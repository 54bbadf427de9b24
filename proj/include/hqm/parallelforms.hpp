#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hqm/datamodel.hpp"

namespace hqm {

class Judge;

/// Rewrites instructions for the parallel form. Implementations must be
/// safe to call concurrently.
class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual std::string paraphrase(const std::string& text) const = 0;
  /// Fallback negation for yes/no stems the templates do not cover.
  virtual std::string negate(const std::string& question) const = 0;
  virtual std::string name() const = 0;
};

/// Offline, deterministic: rewrite::template_paraphrase / template_negate.
class TemplateParaphraser final : public Paraphraser {
 public:
  std::string paraphrase(const std::string& text) const override;
  std::string negate(const std::string& question) const override;
  std::string name() const override { return "template"; }
};

/// Routes through the judge's paraphrase/negate prompts.
class LlmParaphraser final : public Paraphraser {
 public:
  explicit LlmParaphraser(std::shared_ptr<const Judge> judge) : judge_(std::move(judge)) {}
  std::string paraphrase(const std::string& text) const override;
  std::string negate(const std::string& question) const override;
  std::string name() const override { return "llm"; }

 private:
  std::shared_ptr<const Judge> judge_;
};

enum class TransformKind { negate, shuffle_rephrase, paraphrase, failed };
std::string_view to_string(TransformKind k) noexcept;

struct TransformLogEntry {
  std::string sample_id;
  TransformKind transform_kind = TransformKind::paraphrase;
  std::string original_instruction;
  std::string new_instruction;
  bool gt_changed = false;
  std::optional<std::vector<int>> permutation;  // mcq: new position -> old index
  std::optional<std::string> error;

  bool operator==(const TransformLogEntry&) const = default;
};

struct ParallelFormReport {
  std::string benchmark_id;
  std::uint64_t seed = 0;
  std::string paraphraser;
  std::vector<TransformLogEntry> entries;

  bool operator==(const ParallelFormReport&) const = default;
};

json to_json(const TransformLogEntry& e);
/// One JSON line per entry, preceded by a header line with benchmark_id,
/// seed and paraphraser.
void save_transform_log(const ParallelFormReport& report, const std::filesystem::path& path);
std::string serialize_transform_log(const ParallelFormReport& report);

inline constexpr std::string_view kParallelIdSuffix = "_p";
inline constexpr std::string_view kParallelBenchmarkSuffix = "-p";
inline constexpr int kParaphraseAttempts = 2;

/// Template negation first, paraphraser.negate() otherwise; flips the answer.
Sample negate_yes_no(const Sample& sample, const Paraphraser& paraphraser);

/// Seeded non-identity permutation of the options (correct option text is
/// preserved) plus a paraphrased stem.
Sample shuffle_mcq(const Sample& sample, std::uint64_t seed, const Paraphraser& paraphraser);

/// Permutation used by shuffle_mcq: perm[new_position] = old_index. Fisher-
/// Yates draws from SplitMix64(seed), redrawn until it is not the identity.
std::vector<int> mcq_permutation(std::size_t n, std::uint64_t seed);

/// Captioning / free-form: instruction replaced, ground truth untouched.
Sample paraphrase_instruction(const Sample& sample, const Paraphraser& paraphraser);

struct ParallelBuildOptions {
  std::size_t concurrency = 1;
  double max_failure_fraction = 0.01;
};

/// Routes each sample by its ground-truth type. Samples whose transform
/// fails are logged with kind `failed` and omitted; more than
/// max_failure_fraction failures aborts with TransformAbort.
std::pair<BenchmarkSpec, ParallelFormReport> build_parallel_benchmark(const BenchmarkSpec& spec,
                                                                      std::uint64_t seed,
                                                                      const Paraphraser& paraphraser,
                                                                      const ParallelBuildOptions& options = {});

/// Instruction as shown to a model: for MCQ the lettered options are
/// appended ("A. red\nB. blue").
std::string render_prompt(const Sample& sample);

}  // namespace hqm
