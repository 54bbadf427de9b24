#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hqm/datamodel.hpp"

namespace hqm {
class Judge;
}

namespace hqm::benchgen {

struct BBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;
  double area() const { return w * h; }
  bool operator==(const BBox&) const = default;
};

struct SceneObject {
  std::string name;
  BBox bbox;
  std::vector<std::string> attributes;
  bool operator==(const SceneObject&) const = default;
};

struct Relationship {
  std::size_t subject = 0;
  std::string predicate;
  std::size_t object = 0;
  bool operator==(const Relationship&) const = default;
};

struct Region {
  BBox bbox;
  std::string description;
  bool operator==(const Region&) const = default;
};

/// Subset of the Visual Genome export shape:
///   {"image_id", "image_ref"?, "width"?, "height"?,
///    "objects": [{"name", "x", "y", "w", "h", "attributes": [...]}],
///    "relationships": [{"subject": i, "predicate", "object": j}],
///    "regions": [{"x", "y", "w", "h", "description"}]}
struct SceneGraph {
  std::string image_id;
  std::string image_ref;
  std::optional<double> width;
  std::optional<double> height;
  std::vector<SceneObject> objects;
  std::vector<Relationship> relationships;
  std::vector<Region> regions;
  bool operator==(const SceneGraph&) const = default;
};

/// SchemaViolation on out-of-range relationship indices or non-positive
/// box sizes.
void validate(const SceneGraph& g);
SceneGraph scene_graph_from_json(const json& j);
json to_json(const SceneGraph& g);
/// A JSON array of graphs, a single graph object, or JSONL (one per line).
std::vector<SceneGraph> load_scene_graphs(const std::filesystem::path& path);

/// Plain-text serialization used as image_facts for the text-only judge.
std::string describe(const SceneGraph& g);

// ---------------------------------------------------------------------------
// Resources
// ---------------------------------------------------------------------------

struct Lexicons {
  std::set<std::string> colors;
  std::vector<std::pair<std::string, std::vector<std::string>>> environment;  // category -> keywords
  std::vector<std::string> spatial_predicates;
  double comparison_threshold = 1.5;

  /// Bundled resources/colors.txt, environment_keywords.txt,
  /// spatial_predicates.txt.
  static Lexicons bundled();
  /// Override any of the files; empty paths keep the bundled version.
  static Lexicons load(const std::filesystem::path& colors, const std::filesystem::path& environment,
                       const std::filesystem::path& spatial);
};

// ---------------------------------------------------------------------------
// Facts
// ---------------------------------------------------------------------------

struct Fact {
  Dimension dimension = Dimension::existence;
  std::string image_id;
  std::string subject;    // object name (or category for environment)
  std::string predicate;  // attribute, relation, "larger than", ...
  std::string object;     // second object, if any
  std::string answer;     // ground-truth answer
  std::string detail;     // extra context for templates (region, side)
  std::string trace;      // human-readable provenance

  bool operator==(const Fact&) const = default;
};

json to_json(const Fact& f);
Fact fact_from_json(const json& j);

/// Dimension-specific extraction:
///   existence   objects whose name is unique and whose 3x3 image cell holds
///               no other object (answer: name, detail: cell)
///   count       multiplicity per object name (answer: number word)
///   color       color-lexicon attributes of uniquely named objects
///   action      "-ing" attributes of uniquely named objects, and "-ing"
///               relationship predicates (answer: the object)
///   spatial     relationships with a spatial predicate between uniquely
///               named objects
///   comparison  pairs of uniquely named objects, or same-name pairs, whose
///               bbox area ratio >= threshold
///   environment first region per keyword category with a whole-word match
///   text        attributes carrying double-quoted text
std::vector<Fact> extract_facts(const SceneGraph& g, Dimension dim, const Lexicons& lex = Lexicons::bundled());

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

enum class CandidateStatus { candidate, approved, rejected };
std::string_view to_string(CandidateStatus s) noexcept;

enum class GeneratorKind { template_based, llm };
std::string_view to_string(GeneratorKind g) noexcept;

struct GenerationTrace {
  std::vector<Fact> facts;
  std::string generator;  // "template" or "llm"
  std::optional<std::string> review;  // how the status was set
  bool operator==(const GenerationTrace&) const = default;
};

struct CandidateSample {
  Sample sample;
  CandidateStatus status = CandidateStatus::candidate;
  GenerationTrace trace;
  bool operator==(const CandidateSample&) const = default;
};

json to_json(const CandidateSample& c);
CandidateSample candidate_from_json(const json& j);
void save_candidates(const std::vector<CandidateSample>& candidates, const std::filesystem::path& path);
std::vector<CandidateSample> load_candidates(const std::filesystem::path& path);

/// Template question for one fact; never starts with a yes/no stem.
std::pair<std::string, std::string> template_question(const Fact& f);

struct GenerationLog {
  std::vector<std::string> failures;  // "<fact trace>: <reason>"
};

/// One candidate per usable fact. Sample ids are
/// "<image_id>-<dimension>-<k>"; image_facts is describe(g). The llm
/// generator asks the judge to refine the template draft; facts that fail
/// (malformed output, yes/no stem) are logged and skipped.
std::vector<CandidateSample> generate_candidates(const SceneGraph& g, const std::vector<Fact>& facts, Dimension dim,
                                                 GeneratorKind generator, const Judge* judge = nullptr,
                                                 GenerationLog* log = nullptr);

/// All dimensions for every graph, in graph order then dimension order.
std::vector<CandidateSample> generate_all(const std::vector<SceneGraph>& graphs, GeneratorKind generator,
                                          const Lexicons& lex = Lexicons::bundled(), const Judge* judge = nullptr,
                                          GenerationLog* log = nullptr);

/// Applies content_validity labels (target.sample_id = candidate id) by
/// majority, ties rejected. Candidates without labels keep their status.
void apply_reviews(std::vector<CandidateSample>& candidates, const std::vector<AnnotationRecord>& annotations);

/// Fixture mode: approves every pending candidate and stamps the trace.
void auto_approve(std::vector<CandidateSample>& candidates);

/// Seeded per-dimension subsample of approved candidates to the quota.
/// QuotaShortfall lists every short dimension as "dim:have/need".
BenchmarkSpec export_benchmark(const std::vector<CandidateSample>& candidates,
                               const std::map<Dimension, std::size_t>& quota, std::uint64_t seed,
                               const std::string& benchmark_id = "hqh");

}  // namespace hqm::benchgen
