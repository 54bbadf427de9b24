#include "hqm/benchgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hqm/error.hpp"
#include "hqm/judge.hpp"
#include "hqm/resources.hpp"
#include "hqm/rng.hpp"
#include "hqm/stats.hpp"
#include "hqm/text.hpp"

namespace hqm::benchgen {

// ---------------------------------------------------------------------------
// Scene graphs
// ---------------------------------------------------------------------------

namespace {

double number_field(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_number()) throw Error(Errc::SchemaViolation, field, "expected number");
  return it->get<double>();
}

std::string string_field(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end() || !it->is_string()) throw Error(Errc::SchemaViolation, field, "expected string");
  return it->get<std::string>();
}

BBox bbox_from(const json& j) {
  return {number_field(j, "x"), number_field(j, "y"), number_field(j, "w"), number_field(j, "h")};
}

json bbox_json(const BBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void validate(const SceneGraph& g) {
  if (g.image_id.empty()) throw Error(Errc::SchemaViolation, "image_id", "empty");
  auto check_box = [&](const BBox& b, const std::string& what) {
    if (!(b.w > 0) || !(b.h > 0)) throw Error(Errc::SchemaViolation, "bbox", g.image_id + " " + what + " has w/h <= 0");
  };
  for (std::size_t i = 0; i < g.objects.size(); ++i) {
    if (text::trim(g.objects[i].name).empty()) throw Error(Errc::SchemaViolation, "name", g.image_id);
    check_box(g.objects[i].bbox, "object " + std::to_string(i));
  }
  for (const auto& r : g.relationships) {
    if (r.subject >= g.objects.size() || r.object >= g.objects.size()) {
      throw Error(Errc::SchemaViolation, "relationships", g.image_id + " index out of range");
    }
  }
  for (std::size_t i = 0; i < g.regions.size(); ++i) check_box(g.regions[i].bbox, "region " + std::to_string(i));
}

SceneGraph scene_graph_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaViolation, "scene_graph", "expected object");
  SceneGraph g;
  const auto& id = j.at("image_id");
  g.image_id = id.is_string() ? id.get<std::string>() : id.dump();
  g.image_ref = j.value("image_ref", g.image_id);
  if (j.contains("width")) g.width = number_field(j, "width");
  if (j.contains("height")) g.height = number_field(j, "height");
  for (const auto& o : j.value("objects", json::array())) {
    SceneObject obj;
    obj.name = text::to_lower(text::trim(string_field(o, "name")));
    obj.bbox = bbox_from(o);
    for (const auto& a : o.value("attributes", json::array())) {
      if (!a.is_string()) throw Error(Errc::SchemaViolation, "attributes", "expected strings");
      obj.attributes.push_back(text::trim(a.get<std::string>()));
    }
    g.objects.push_back(std::move(obj));
  }
  for (const auto& r : j.value("relationships", json::array())) {
    Relationship rel;
    const auto s = r.at("subject");
    const auto o = r.at("object");
    if (!s.is_number_unsigned() || !o.is_number_unsigned()) {
      throw Error(Errc::SchemaViolation, "relationships", "indices must be non-negative integers");
    }
    rel.subject = s.get<std::size_t>();
    rel.object = o.get<std::size_t>();
    rel.predicate = text::to_lower(text::trim(string_field(r, "predicate")));
    g.relationships.push_back(std::move(rel));
  }
  for (const auto& r : j.value("regions", json::array())) {
    g.regions.push_back({bbox_from(r), text::trim(string_field(r, "description"))});
  }
  validate(g);
  return g;
}

json to_json(const SceneGraph& g) {
  json objects = json::array();
  for (const auto& o : g.objects) {
    auto j = bbox_json(o.bbox);
    j["name"] = o.name;
    j["attributes"] = o.attributes;
    objects.push_back(j);
  }
  json rels = json::array();
  for (const auto& r : g.relationships) rels.push_back({{"subject", r.subject}, {"predicate", r.predicate}, {"object", r.object}});
  json regions = json::array();
  for (const auto& r : g.regions) {
    auto j = bbox_json(r.bbox);
    j["description"] = r.description;
    regions.push_back(j);
  }
  json out{{"image_id", g.image_id}, {"image_ref", g.image_ref}, {"objects", objects},
           {"relationships", rels},   {"regions", regions}};
  if (g.width) out["width"] = *g.width;
  if (g.height) out["height"] = *g.height;
  return out;
}

std::vector<SceneGraph> load_scene_graphs(const std::filesystem::path& path) {
  const auto content = read_text(path);
  std::vector<SceneGraph> out;
  try {
    const auto j = json::parse(content);
    if (j.is_array()) {
      for (const auto& g : j) out.push_back(scene_graph_from_json(g));
    } else {
      out.push_back(scene_graph_from_json(j));
    }
    return out;
  } catch (const json::parse_error&) {
    // fall through to JSONL
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.string(), e.what());
  }
  try {
    for (const auto& [line_no, j] : read_jsonl(path)) out.push_back(scene_graph_from_json(j));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, path.string(), e.what());
  }
  return out;
}

std::string describe(const SceneGraph& g) {
  std::string out = "Objects:";
  for (std::size_t i = 0; i < g.objects.size(); ++i) {
    const auto& o = g.objects[i];
    out += (i == 0 ? " " : "; ") + o.name + " at (x=" + num(o.bbox.x) + ", y=" + num(o.bbox.y) +
           ", w=" + num(o.bbox.w) + ", h=" + num(o.bbox.h) + ")";
    if (!o.attributes.empty()) {
      out += " [";
      for (std::size_t k = 0; k < o.attributes.size(); ++k) out += (k ? ", " : "") + o.attributes[k];
      out += "]";
    }
  }
  out += ".";
  if (!g.relationships.empty()) {
    out += "\nRelationships:";
    for (std::size_t i = 0; i < g.relationships.size(); ++i) {
      const auto& r = g.relationships[i];
      out += (i == 0 ? " " : "; ") + g.objects[r.subject].name + " " + r.predicate + " " + g.objects[r.object].name;
    }
    out += ".";
  }
  if (!g.regions.empty()) {
    out += "\nRegions:";
    for (std::size_t i = 0; i < g.regions.size(); ++i) out += (i == 0 ? " " : "; ") + g.regions[i].description;
    out += ".";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lexicons
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> content_lines(std::string_view content) {
  std::vector<std::string> out;
  std::istringstream in{std::string(content)};
  for (std::string line; std::getline(in, line);) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.push_back(std::move(t));
  }
  return out;
}

std::string resource_or_file(const std::filesystem::path& path, std::string_view bundled) {
  if (!path.empty()) return read_text(path);
  const auto r = resources::get(bundled);
  if (!r) throw Error(Errc::Io, std::string(bundled), "resource not bundled");
  return std::string(*r);
}

}  // namespace

Lexicons Lexicons::load(const std::filesystem::path& colors, const std::filesystem::path& environment,
                        const std::filesystem::path& spatial) {
  Lexicons lex;
  for (auto& c : content_lines(resource_or_file(colors, "colors.txt"))) lex.colors.insert(text::to_lower(c));
  for (const auto& line : content_lines(resource_or_file(environment, "environment_keywords.txt"))) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw Error(Errc::Config, "environment_keywords", "expected 'category: k1, k2'");
    std::vector<std::string> keywords;
    std::istringstream in(line.substr(colon + 1));
    for (std::string kw; std::getline(in, kw, ',');) {
      auto n = text::normalize(kw);
      if (!n.empty()) keywords.push_back(std::move(n));
    }
    lex.environment.emplace_back(text::trim(line.substr(0, colon)), std::move(keywords));
  }
  for (auto& p : content_lines(resource_or_file(spatial, "spatial_predicates.txt"))) {
    lex.spatial_predicates.push_back(text::normalize(p));
  }
  return lex;
}

Lexicons Lexicons::bundled() {
  static const Lexicons kBundled = load({}, {}, {});
  return kBundled;
}

// ---------------------------------------------------------------------------
// Facts
// ---------------------------------------------------------------------------

json to_json(const Fact& f) {
  return {{"dimension", to_string(f.dimension)}, {"image_id", f.image_id}, {"subject", f.subject},
          {"predicate", f.predicate},           {"object", f.object},     {"answer", f.answer},
          {"detail", f.detail},                 {"trace", f.trace}};
}

Fact fact_from_json(const json& j) {
  Fact f;
  try {
    f.dimension = parse_dimension(j.at("dimension").get<std::string>());
    f.image_id = j.at("image_id").get<std::string>();
    f.subject = j.value("subject", "");
    f.predicate = j.value("predicate", "");
    f.object = j.value("object", "");
    f.answer = j.at("answer").get<std::string>();
    f.detail = j.value("detail", "");
    f.trace = j.value("trace", "");
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation, "fact", e.what());
  }
  return f;
}

namespace {

std::string pluralize(const std::string& noun) {
  static const std::map<std::string, std::string> kIrregular{
      {"person", "people"}, {"man", "men"},   {"woman", "women"}, {"child", "children"}, {"mouse", "mice"},
      {"foot", "feet"},     {"tooth", "teeth"}, {"sheep", "sheep"}, {"fish", "fish"},     {"deer", "deer"},
      {"goose", "geese"},   {"knife", "knives"}, {"leaf", "leaves"}, {"shelf", "shelves"}, {"bus", "buses"},
  };
  const auto words = text::split_whitespace(noun);
  if (words.empty()) return noun;
  std::string head;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) head += words[i] + " ";
  const auto& last = words.back();
  if (const auto it = kIrregular.find(last); it != kIrregular.end()) return head + it->second;
  const auto ends = [&](std::string_view s) { return last.ends_with(s); };
  if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh")) return head + last + "es";
  if (last.size() > 1 && last.back() == 'y' && std::string_view("aeiou").find(last[last.size() - 2]) == std::string_view::npos) {
    return head + last.substr(0, last.size() - 1) + "ies";
  }
  return head + last + "s";
}

std::map<std::string, std::size_t> name_counts(const SceneGraph& g) {
  std::map<std::string, std::size_t> counts;
  for (const auto& o : g.objects) ++counts[o.name];
  return counts;
}

std::pair<double, double> extent(const SceneGraph& g) {
  double w = g.width.value_or(0.0);
  double h = g.height.value_or(0.0);
  if (!g.width || !g.height) {
    for (const auto& o : g.objects) {
      if (!g.width) w = std::max(w, o.bbox.x + o.bbox.w);
      if (!g.height) h = std::max(h, o.bbox.y + o.bbox.h);
    }
    for (const auto& r : g.regions) {
      if (!g.width) w = std::max(w, r.bbox.x + r.bbox.w);
      if (!g.height) h = std::max(h, r.bbox.y + r.bbox.h);
    }
  }
  return {w, h};
}

int cell_of(const BBox& b, double width, double height) {
  const auto clamp3 = [](double v) { return std::clamp(static_cast<int>(std::floor(v * 3.0)), 0, 2); };
  const int col = clamp3((b.x + b.w / 2.0) / width);
  const int row = clamp3((b.y + b.h / 2.0) / height);
  return row * 3 + col;
}

constexpr std::string_view kCellNames[9] = {"top-left", "top",    "top-right",   "left",        "center",
                                            "right",    "bottom-left", "bottom", "bottom-right"};

bool is_ing_word(const std::string& w) { return w.size() > 4 && w.ends_with("ing"); }

std::string quoted_text(const std::string& attr) {
  const auto b = attr.find('"');
  if (b == std::string::npos) return {};
  const auto e = attr.find('"', b + 1);
  if (e == std::string::npos || e == b + 1) return {};
  return text::trim(std::string_view(attr).substr(b + 1, e - b - 1));
}

bool contains_phrase(const std::string& normalized_haystack, const std::string& phrase) {
  return (" " + normalized_haystack + " ").find(" " + phrase + " ") != std::string::npos;
}

std::string obj_ref(const SceneGraph& g, std::size_t i) { return "objects[" + std::to_string(i) + "] " + g.objects[i].name; }

}  // namespace

std::vector<Fact> extract_facts(const SceneGraph& g, Dimension dim, const Lexicons& lex) {
  const auto counts = name_counts(g);
  const auto unique = [&](const std::string& name) { return counts.at(name) == 1; };
  std::vector<Fact> out;
  auto make = [&](std::string subject, std::string predicate, std::string object, std::string answer,
                  std::string detail, std::string trace) {
    out.push_back(Fact{dim, g.image_id, std::move(subject), std::move(predicate), std::move(object), std::move(answer),
                       std::move(detail), std::move(trace)});
  };

  switch (dim) {
    case Dimension::existence: {
      const auto [w, h] = extent(g);
      if (w <= 0 || h <= 0) break;
      std::map<int, std::size_t> per_cell;
      for (const auto& o : g.objects) ++per_cell[cell_of(o.bbox, w, h)];
      for (std::size_t i = 0; i < g.objects.size(); ++i) {
        const auto& o = g.objects[i];
        const int cell = cell_of(o.bbox, w, h);
        if (!unique(o.name) || per_cell[cell] != 1) continue;
        make(o.name, "present", "", o.name, std::string(kCellNames[cell]), obj_ref(g, i) + " alone in " + std::string(kCellNames[cell]));
      }
      break;
    }
    case Dimension::count: {
      std::vector<std::string> order;
      for (const auto& o : g.objects) {
        if (std::find(order.begin(), order.end(), o.name) == order.end()) order.push_back(o.name);
      }
      for (const auto& name : order) {
        const auto n = counts.at(name);
        make(name, "count", "", text::number_word(static_cast<int>(n)), pluralize(name),
             name + " x" + std::to_string(n));
      }
      break;
    }
    case Dimension::color:
    case Dimension::action: {
      for (std::size_t i = 0; i < g.objects.size(); ++i) {
        const auto& o = g.objects[i];
        if (!unique(o.name)) continue;
        std::vector<std::string> hits;
        for (const auto& a : o.attributes) {
          const auto lower = text::to_lower(a);
          if (dim == Dimension::color ? lex.colors.count(lower) != 0 : is_ing_word(lower)) hits.push_back(lower);
        }
        if (hits.size() == 1) make(o.name, hits.front(), "", hits.front(), "attribute", obj_ref(g, i) + " [" + hits.front() + "]");
      }
      if (dim == Dimension::action) {
        std::map<std::pair<std::string, std::string>, std::size_t> seen;
        for (const auto& r : g.relationships) {
          const auto words = text::split_whitespace(r.predicate);
          if (!words.empty() && is_ing_word(words.front())) ++seen[{g.objects[r.subject].name, r.predicate}];
        }
        for (const auto& r : g.relationships) {
          const auto words = text::split_whitespace(r.predicate);
          if (words.empty() || !is_ing_word(words.front())) continue;
          const auto& subj = g.objects[r.subject].name;
          const auto& obj = g.objects[r.object].name;
          if (!unique(subj) || seen[{subj, r.predicate}] != 1) continue;
          make(subj, r.predicate, obj, obj, "relationship", subj + " " + r.predicate + " " + obj);
        }
      }
      break;
    }
    case Dimension::spatial_relation: {
      const auto spatial = [&](const std::string& p) {
        return std::find(lex.spatial_predicates.begin(), lex.spatial_predicates.end(), text::normalize(p)) !=
               lex.spatial_predicates.end();
      };
      std::map<std::pair<std::size_t, std::size_t>, std::size_t> per_pair;
      for (const auto& r : g.relationships) {
        if (spatial(r.predicate)) ++per_pair[{r.subject, r.object}];
      }
      for (const auto& r : g.relationships) {
        if (!spatial(r.predicate)) continue;
        const auto& subj = g.objects[r.subject].name;
        const auto& obj = g.objects[r.object].name;
        if (r.subject == r.object || subj == obj || !unique(subj) || !unique(obj)) continue;
        if (per_pair[{r.subject, r.object}] != 1) continue;
        make(subj, r.predicate, obj, r.predicate + " the " + obj, "relationship", subj + " " + r.predicate + " " + obj);
      }
      break;
    }
    case Dimension::comparison_relation: {
      for (std::size_t i = 0; i < g.objects.size(); ++i) {
        for (std::size_t j = i + 1; j < g.objects.size(); ++j) {
          const auto& a = g.objects[i];
          const auto& b = g.objects[j];
          const double big = std::max(a.bbox.area(), b.bbox.area());
          const double small = std::min(a.bbox.area(), b.bbox.area());
          if (small <= 0 || big / small < lex.comparison_threshold) continue;
          const bool a_larger = a.bbox.area() > b.bbox.area();
          const auto trace = obj_ref(g, i) + " vs " + obj_ref(g, j) + " area ratio " + num(big / small);
          if (a.name != b.name) {
            if (!unique(a.name) || !unique(b.name)) continue;
            make(a.name, "larger than", b.name, a_larger ? a.name : b.name, "pair", trace);
          } else if (counts.at(a.name) == 2) {
            const double ca = a.bbox.x + a.bbox.w / 2.0;
            const double cb = b.bbox.x + b.bbox.w / 2.0;
            if (ca == cb) continue;
            const bool larger_is_left = a_larger ? ca < cb : cb < ca;
            make(a.name, "larger than", b.name, larger_is_left ? "the one on the left" : "the one on the right", "same",
                 trace);
          }
        }
      }
      break;
    }
    case Dimension::environment: {
      for (const auto& [category, keywords] : lex.environment) {
        bool done = false;
        for (std::size_t ri = 0; ri < g.regions.size() && !done; ++ri) {
          const auto desc = text::normalize(g.regions[ri].description);
          for (const auto& kw : keywords) {
            if (contains_phrase(desc, kw)) {
              make(category, "environment", "", kw, category,
                   "regions[" + std::to_string(ri) + "] \"" + g.regions[ri].description + "\" matches " + kw);
              done = true;
              break;
            }
          }
        }
      }
      break;
    }
    case Dimension::text: {
      for (std::size_t i = 0; i < g.objects.size(); ++i) {
        const auto& o = g.objects[i];
        if (!unique(o.name)) continue;
        for (const auto& a : o.attributes) {
          const auto t = quoted_text(a);
          if (t.empty()) continue;
          make(o.name, "reads", "", t, "text", obj_ref(g, i) + " [" + a + "]");
          break;
        }
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidates
// ---------------------------------------------------------------------------

std::string_view to_string(CandidateStatus s) noexcept {
  switch (s) {
    case CandidateStatus::candidate:
      return "candidate";
    case CandidateStatus::approved:
      return "approved";
    case CandidateStatus::rejected:
      return "rejected";
  }
  return "?";
}

std::string_view to_string(GeneratorKind g) noexcept { return g == GeneratorKind::llm ? "llm" : "template"; }

namespace {

CandidateStatus parse_status(const std::string& s) {
  if (s == "candidate") return CandidateStatus::candidate;
  if (s == "approved") return CandidateStatus::approved;
  if (s == "rejected") return CandidateStatus::rejected;
  throw Error(Errc::SchemaViolation, "status", s);
}

}  // namespace

json to_json(const CandidateSample& c) {
  auto j = hqm::to_json(c.sample);
  json facts = json::array();
  for (const auto& f : c.trace.facts) facts.push_back(to_json(f));
  json trace{{"facts", facts}, {"generator", c.trace.generator}};
  if (c.trace.review) trace["review"] = *c.trace.review;
  j["status"] = to_string(c.status);
  j["generation_trace"] = trace;
  return j;
}

CandidateSample candidate_from_json(const json& j) {
  CandidateSample c;
  c.sample = sample_from_json(j);
  c.status = parse_status(j.value("status", "candidate"));
  if (const auto it = j.find("generation_trace"); it != j.end()) {
    for (const auto& f : it->value("facts", json::array())) c.trace.facts.push_back(fact_from_json(f));
    c.trace.generator = it->value("generator", "");
    if (it->contains("review")) c.trace.review = it->at("review").get<std::string>();
  }
  return c;
}

void save_candidates(const std::vector<CandidateSample>& candidates, const std::filesystem::path& path) {
  std::vector<json> lines;
  lines.reserve(candidates.size());
  for (const auto& c : candidates) lines.push_back(to_json(c));
  write_jsonl(lines, path);
}

std::vector<CandidateSample> load_candidates(const std::filesystem::path& path) {
  std::vector<CandidateSample> out;
  for (const auto& [line_no, j] : read_jsonl(path)) {
    try {
      out.push_back(candidate_from_json(j));
    } catch (const Error& e) {
      if (e.code() != Errc::SchemaViolation) throw;
      throw Error(Errc::SchemaViolation, e.detail(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::pair<std::string, std::string> template_question(const Fact& f) {
  switch (f.dimension) {
    case Dimension::existence:
      return {"What object can be seen in the " + f.detail + " part of the image?", f.answer};
    case Dimension::count:
      return {"How many " + f.detail + " are visible in the image?", f.answer};
    case Dimension::color:
      return {"What color is the " + f.subject + "?", f.answer};
    case Dimension::action:
      if (f.detail == "relationship") return {"What is the " + f.subject + " " + f.predicate + "?", f.answer};
      return {"What is the " + f.subject + " doing?", f.answer};
    case Dimension::spatial_relation:
      return {"Where is the " + f.subject + " located relative to the " + f.object + "?", f.answer};
    case Dimension::comparison_relation:
      if (f.detail == "same") {
        return {"Which " + f.subject + " appears larger, the one on the left or the one on the right?", f.answer};
      }
      return {"Which appears larger in the image, the " + f.subject + " or the " + f.object + "?", f.answer};
    case Dimension::environment:
      if (f.subject == "place") return {"What kind of place is shown in the image?", f.answer};
      if (f.subject == "weather") return {"What is the weather like in the image?", f.answer};
      if (f.subject == "time") return {"What time of day does the image show?", f.answer};
      if (f.subject == "setting") return {"What kind of setting, indoor or outdoor, does the image show?", f.answer};
      return {"What " + f.subject + " is shown in the image?", f.answer};
    case Dimension::text:
      return {"What does the text on the " + f.subject + " say?", f.answer};
  }
  return {};
}

std::vector<CandidateSample> generate_candidates(const SceneGraph& g, const std::vector<Fact>& facts, Dimension dim,
                                                 GeneratorKind generator, const Judge* judge, GenerationLog* log) {
  if (generator == GeneratorKind::llm && judge == nullptr) {
    throw Error(Errc::InvalidArgument, "judge", "the llm generator needs a judge");
  }
  const auto facts_text = describe(g);
  std::vector<CandidateSample> out;
  for (const auto& f : facts) {
    if (f.dimension != dim) continue;
    auto [question, answer] = template_question(f);
    try {
      if (generator == GeneratorKind::llm) {
        const auto generated = judge->generate_question(to_string(dim), facts_text, question, answer);
        question = generated.question;
        answer = generated.answer;
      }
      if (text::trim(question).empty() || text::trim(answer).empty()) {
        throw Error(Errc::GenerationFailure, f.trace, "empty question or answer");
      }
      if (text::starts_with_yes_no_stem(question)) {
        throw Error(Errc::GenerationFailure, f.trace, "closed-ended stem: " + question);
      }
    } catch (const Error& e) {
      if (e.code() != Errc::GenerationFailure) throw;
      if (log) log->failures.push_back(f.trace + ": " + e.what());
      continue;
    }
    CandidateSample c;
    c.sample.sample_id = g.image_id + "-" + std::string(to_string(dim)) + "-" + std::to_string(out.size());
    c.sample.image_ref = g.image_ref.empty() ? g.image_id : g.image_ref;
    c.sample.image_facts = facts_text;
    c.sample.instruction = question;
    c.sample.ground_truth = FreeFormTruth{answer};
    c.sample.dimension = dim;
    c.sample.level = level_of(dim);
    c.trace.facts = {f};
    c.trace.generator = std::string(to_string(generator));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CandidateSample> generate_all(const std::vector<SceneGraph>& graphs, GeneratorKind generator,
                                          const Lexicons& lex, const Judge* judge, GenerationLog* log) {
  std::vector<CandidateSample> out;
  for (const auto& g : graphs) {
    for (const auto dim : kAllDimensions) {
      auto batch = generate_candidates(g, extract_facts(g, dim, lex), dim, generator, judge, log);
      std::move(batch.begin(), batch.end(), std::back_inserter(out));
    }
  }
  return out;
}

void apply_reviews(std::vector<CandidateSample>& candidates, const std::vector<AnnotationRecord>& annotations) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> tallies;  // valid, invalid
  for (const auto& a : annotations) {
    if (a.queue != Queue::content_validity) continue;
    auto& t = tallies[a.target.sample_id];
    (a.label == Label::valid ? t.first : t.second)++;
  }
  for (auto& c : candidates) {
    const auto it = tallies.find(c.sample.sample_id);
    if (it == tallies.end()) continue;
    const auto [valid, invalid] = it->second;
    c.status = valid > invalid ? CandidateStatus::approved : CandidateStatus::rejected;
    c.trace.review = "human review: " + std::to_string(valid) + " valid / " + std::to_string(invalid) + " invalid";
  }
}

void auto_approve(std::vector<CandidateSample>& candidates) {
  for (auto& c : candidates) {
    if (c.status != CandidateStatus::candidate) continue;
    c.status = CandidateStatus::approved;
    c.trace.review = "auto-approved (fixture mode, no human review)";
  }
}

BenchmarkSpec export_benchmark(const std::vector<CandidateSample>& candidates,
                               const std::map<Dimension, std::size_t>& quota, std::uint64_t seed,
                               const std::string& benchmark_id) {
  std::map<Dimension, std::vector<const CandidateSample*>> eligible;
  for (const auto& c : candidates) {
    if (c.status != CandidateStatus::approved || !c.sample.dimension) continue;
    if (!c.sample.image_facts || text::trim(*c.sample.image_facts).empty()) continue;
    if (text::starts_with_yes_no_stem(c.sample.instruction)) continue;
    if (!c.trace.facts.empty() && c.trace.facts.front().dimension != *c.sample.dimension) continue;
    eligible[*c.sample.dimension].push_back(&c);
  }
  std::string shortfalls;
  for (const auto& [dim, need] : quota) {
    const auto have = eligible[dim].size();
    if (have < need) {
      shortfalls += (shortfalls.empty() ? "" : ",") + std::string(to_string(dim)) + ":" + std::to_string(have) + "/" +
                    std::to_string(need);
    }
  }
  if (!shortfalls.empty()) throw Error(Errc::QuotaShortfall, shortfalls, "approved/needed per dimension");

  BenchmarkSpec spec;
  spec.benchmark_id = benchmark_id;
  spec.task_type = TaskType::free_form;
  spec.metric_orientation = Orientation::lower_better;
  std::string quota_text;
  for (const auto& [dim, need] : quota) {
    quota_text += (quota_text.empty() ? "" : ",") + std::string(to_string(dim)) + "=" + std::to_string(need);
    const auto& pool = eligible[dim];
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (const auto i : stats::sample_subset(idx, need, derive_seed(seed, to_string(dim)))) {
      auto s = pool[i]->sample;
      s.level = level_of(*s.dimension);
      spec.samples.push_back(std::move(s));
    }
  }
  spec.provenance = "benchgen export seed=" + std::to_string(seed) + " quota{" + quota_text + "}";
  validate(spec);
  return spec;
}

}  // namespace hqm::benchgen
