#include "hqm/metrics.hpp"

#include <algorithm>
#include <set>

#include "hqm/error.hpp"
#include "hqm/parallelforms.hpp"
#include "hqm/text.hpp"

namespace hqm::metrics {

std::string_view to_string(ParseMode m) noexcept {
  switch (m) {
    case ParseMode::first_token:
      return "first_token";
    case ParseMode::first_sentence_scan:
      return "first_sentence_scan";
    case ParseMode::judge_fallback:
      return "judge_fallback";
  }
  return "?";
}

ParseMode parse_mode(std::string_view s) {
  if (s == "first_token") return ParseMode::first_token;
  if (s == "first_sentence_scan") return ParseMode::first_sentence_scan;
  if (s == "judge_fallback") return ParseMode::judge_fallback;
  throw Error(Errc::InvalidArgument, std::string(s), "unknown parse mode");
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string strip_punct(std::string_view token) {
  auto b = token.begin();
  auto e = token.end();
  while (b != e && !is_alnum(*b)) ++b;
  while (e != b && !is_alnum(*(e - 1))) --e;
  return std::string(b, e);
}

std::optional<bool> yes_no_word(const std::string& core, bool case_insensitive) {
  if (case_insensitive) {
    const auto lower = text::to_lower(core);
    if (lower == "yes") return true;
    if (lower == "no") return false;
    return std::nullopt;
  }
  if (core == "yes" || core == "Yes") return true;
  if (core == "no" || core == "No") return false;
  return std::nullopt;
}

struct OptionToken {
  std::optional<int> index;
  bool ends_sentence = false;
};

OptionToken option_token(std::string_view raw, std::size_t option_count, bool case_insensitive, bool whole_response,
                         std::string_view previous, bool first_token_mode) {
  OptionToken out;
  std::string_view core = raw;
  bool decorated = false;
  while (!core.empty() && (core.front() == '(' || core.front() == '[')) {
    core.remove_prefix(1);
    decorated = true;
  }
  bool terminal = false;
  while (!core.empty() && (core.back() == ')' || core.back() == ']' || core.back() == '.' || core.back() == ':' ||
                           core.back() == ',' || core.back() == '!' || core.back() == '?')) {
    if (core.back() == '.' || core.back() == '!' || core.back() == '?') terminal = true;
    core.remove_suffix(1);
    decorated = true;
  }
  out.ends_sentence = terminal && core.size() > 1;
  if (core.size() != 1 || !std::isalpha(static_cast<unsigned char>(core[0]))) return out;

  const char c = core[0];
  const bool upper = std::isupper(static_cast<unsigned char>(c)) != 0;
  const int idx = std::toupper(static_cast<unsigned char>(c)) - 'A';
  if (idx < 0 || static_cast<std::size_t>(idx) >= option_count) return out;

  if (upper) {
    const auto prev = text::to_lower(strip_punct(previous));
    const bool cued = prev == "option" || prev == "answer" || prev == "is" || prev == "choice" || prev == "choose";
    if (decorated || whole_response || first_token_mode || cued) out.index = idx;
  } else if (case_insensitive && (decorated || whole_response)) {
    out.index = idx;
  }
  return out;
}

template <typename Result>
std::map<std::string, const ModelResponse*> check_coverage(const std::vector<Sample>& samples,
                                                           const std::vector<ModelResponse>& responses) {
  std::map<std::string, const ModelResponse*> by_sample;
  std::vector<std::string> problems;
  for (const auto& r : responses) {
    if (!by_sample.emplace(r.sample_id, &r).second) problems.push_back("duplicate:" + r.sample_id);
  }
  std::set<std::string> wanted;
  for (const auto& s : samples) {
    wanted.insert(s.sample_id);
    if (!by_sample.count(s.sample_id)) problems.push_back("missing:" + s.sample_id);
  }
  for (const auto& [id, _] : by_sample) {
    if (!wanted.count(id)) problems.push_back("unexpected:" + id);
  }
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : ",") + p;
    throw Error(Errc::CoverageGap, joined);
  }
  return by_sample;
}

}  // namespace

std::optional<bool> extract_yes_no(std::string_view response, const ParsePolicy& policy) {
  if (policy.mode == ParseMode::first_token) {
    const auto tokens = text::split_whitespace(response);
    if (tokens.empty()) return std::nullopt;
    return yes_no_word(strip_punct(tokens.front()), policy.case_insensitive);
  }
  const auto sentences = text::split_sentences(response);
  if (sentences.empty()) return std::nullopt;
  for (const auto& token : text::split_whitespace(sentences.front())) {
    if (auto v = yes_no_word(strip_punct(token), policy.case_insensitive)) return v;
  }
  return std::nullopt;
}

std::optional<int> extract_option(std::string_view response, std::size_t option_count, const ParsePolicy& policy) {
  const auto tokens = text::split_whitespace(response);
  if (tokens.empty()) return std::nullopt;
  const bool whole = tokens.size() == 1;
  if (policy.mode == ParseMode::first_token) {
    return option_token(tokens.front(), option_count, policy.case_insensitive, whole, "", true).index;
  }
  std::string_view previous;
  for (const auto& t : tokens) {
    const auto tok = option_token(t, option_count, policy.case_insensitive, whole, previous, false);
    if (tok.index) return tok.index;
    if (tok.ends_sentence) break;
    previous = t;
  }
  return std::nullopt;
}

YesNoAccuracy accuracy_yes_no(const std::vector<Sample>& samples, const std::vector<ModelResponse>& responses,
                              const ParsePolicy& policy, const Judge* judge) {
  const auto by_sample = check_coverage<YesNoAccuracy>(samples, responses);
  if (policy.mode == ParseMode::judge_fallback && judge == nullptr) {
    throw Error(Errc::InvalidArgument, "judge", "judge_fallback needs a judge");
  }
  YesNoAccuracy out;
  std::size_t matches = 0;
  std::size_t yes = 0;
  for (const auto& s : samples) {
    const auto* gt = std::get_if<YesNoTruth>(&s.ground_truth);
    if (gt == nullptr) throw Error(Errc::SchemaViolation, "ground_truth.type", s.sample_id + " is not yes_no");
    const auto& resp = *by_sample.at(s.sample_id);
    auto answer = extract_yes_no(resp.text, policy);
    if (!answer && policy.mode == ParseMode::judge_fallback && !text::trim(resp.text).empty()) {
      if (judge->main_match(s.instruction, "yes", resp.text).match) {
        answer = true;
      } else if (judge->main_match(s.instruction, "no", resp.text).match) {
        answer = false;
      }
    }
    ++out.n;
    if (!answer) {
      ++out.unparsed;
      out.unparsed_ids.push_back(s.sample_id);
      continue;
    }
    ++out.parsed;
    if (*answer) ++yes;
    if (*answer == gt->answer) ++matches;
  }
  if (out.n > 0) {
    out.acc = static_cast<double>(matches) / static_cast<double>(out.n);
    out.yes_ratio = static_cast<double>(yes) / static_cast<double>(out.n);
  }
  if (out.parsed > 0) out.acc_parsed = static_cast<double>(matches) / static_cast<double>(out.parsed);
  return out;
}

McqAccuracy accuracy_mcq(const std::vector<Sample>& samples, const std::vector<ModelResponse>& responses,
                         const ParsePolicy& policy, const Judge* judge) {
  const auto by_sample = check_coverage<McqAccuracy>(samples, responses);
  if (policy.mode == ParseMode::judge_fallback && judge == nullptr) {
    throw Error(Errc::InvalidArgument, "judge", "judge_fallback needs a judge");
  }
  McqAccuracy out;
  std::size_t matches = 0;
  for (const auto& s : samples) {
    const auto* gt = std::get_if<McqTruth>(&s.ground_truth);
    if (gt == nullptr) throw Error(Errc::SchemaViolation, "ground_truth.type", s.sample_id + " is not mcq");
    const auto& resp = *by_sample.at(s.sample_id);
    auto choice = extract_option(resp.text, gt->options.size(), policy);
    if (!choice && policy.mode == ParseMode::judge_fallback && !text::trim(resp.text).empty()) {
      const auto prompt = render_prompt(s);
      for (std::size_t i = 0; i < gt->options.size() && !choice; ++i) {
        if (judge->main_match(prompt, gt->options[i], resp.text).match) choice = static_cast<int>(i);
      }
    }
    ++out.n;
    if (!choice) {
      ++out.unparsed;
      out.unparsed_ids.push_back(s.sample_id);
      continue;
    }
    ++out.parsed;
    if (*choice == gt->correct_index) ++matches;
  }
  if (out.n > 0) out.acc = static_cast<double>(matches) / static_cast<double>(out.n);
  if (out.parsed > 0) out.acc_parsed = static_cast<double>(matches) / static_cast<double>(out.parsed);
  return out;
}

// ---------------------------------------------------------------------------
// CHAIR
// ---------------------------------------------------------------------------

ObjectLexicon::ObjectLexicon(const std::map<std::string, std::string>& surface_to_canonical) {
  for (const auto& [surface, canonical] : surface_to_canonical) {
    auto key = text::normalized_tokens(surface);
    const auto name = text::normalize(canonical);
    if (key.empty()) continue;
    if (name.empty()) throw Error(Errc::SchemaViolation, "lexicon", "empty canonical name for '" + surface + "'");
    max_words_ = std::max(max_words_, key.size());
    entries_[std::move(key)] = name;
  }
}

ObjectLexicon ObjectLexicon::from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaViolation, "lexicon", "expected a JSON object");
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw Error(Errc::SchemaViolation, "lexicon", "value for '" + k + "' is not a string");
    m[k] = v.get<std::string>();
  }
  return ObjectLexicon(m);
}

ObjectLexicon ObjectLexicon::load(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(read_text(path)));
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaViolation, path.string(), e.what());
  }
}

std::set<std::string> ObjectLexicon::mentions(std::string_view caption) const {
  std::set<std::string> out;
  const auto tokens = text::normalized_tokens(caption);
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_words_, tokens.size() - i); len >= 1 && !matched; --len) {
      std::vector<std::string> key(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        auto& last = key.back();
        for (const std::string_view suffix : {"es", "s"}) {
          if (last.size() > suffix.size() + 1 && last.ends_with(suffix)) {
            auto singular = key;
            singular.back() = last.substr(0, last.size() - suffix.size());
            it = entries_.find(singular);
            if (it != entries_.end()) break;
          }
        }
      }
      if (it != entries_.end()) {
        out.insert(it->second);
        i += len;
        matched = true;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

ChairResult chair(const std::map<std::string, std::string>& captions, const std::vector<Sample>& samples,
                  const ObjectLexicon& lexicon) {
  if (lexicon.empty()) throw Error(Errc::EmptyLexicon, "lexicon");
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : samples) by_id[s.sample_id] = &s;

  ChairResult out;
  for (const auto& [sample_id, caption] : captions) {
    const auto it = by_id.find(sample_id);
    if (it == by_id.end()) throw Error(Errc::CoverageGap, "unexpected:" + sample_id);
    const auto* gt = std::get_if<CaptionTruth>(&it->second->ground_truth);
    if (gt == nullptr) throw Error(Errc::SchemaViolation, "ground_truth.type", sample_id + " is not captioning");
    std::set<std::string> truth;
    for (const auto& o : gt->gt_objects) truth.insert(text::normalize(o));

    ChairSample row;
    row.sample_id = sample_id;
    for (const auto& m : lexicon.mentions(caption)) {
      ++row.mentioned;
      if (!truth.count(m)) {
        ++row.hallucinated;
        row.hallucinated_objects.push_back(m);
      }
    }
    if (row.mentioned > 0) {
      row.chair = static_cast<double>(row.hallucinated) / static_cast<double>(row.mentioned);
    }
    out.mentioned += row.mentioned;
    out.hallucinated += row.hallucinated;
    out.per_sample.push_back(std::move(row));
  }
  if (out.mentioned > 0) out.chair = static_cast<double>(out.hallucinated) / static_cast<double>(out.mentioned);
  return out;
}

// ---------------------------------------------------------------------------
// Length
// ---------------------------------------------------------------------------

double avg_response_length(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(Errc::EmptySet, "responses");
  std::size_t words = 0;
  for (const auto& t : texts) words += text::split_whitespace(t).size();
  return static_cast<double>(words) / static_cast<double>(texts.size());
}

double avg_response_length(const std::vector<ModelResponse>& responses) {
  std::vector<std::string> texts;
  texts.reserve(responses.size());
  for (const auto& r : responses) texts.push_back(r.text);
  return avg_response_length(texts);
}

// ---------------------------------------------------------------------------
// HQH
// ---------------------------------------------------------------------------

HqhAggregate aggregate(const std::vector<const JudgeVerdict*>& verdicts) {
  HqhAggregate out;
  out.n = verdicts.size();
  if (out.n == 0) return out;
  std::size_t mismatched = 0;
  std::size_t any = 0;
  long long claims = 0;
  for (const auto* v : verdicts) {
    const bool main_hal = !v->main_match;
    if (main_hal) ++mismatched;
    if (main_hal || v->extra_claim_count > 0) ++any;
    claims += v->extra_claim_count;
  }
  const auto n = static_cast<double>(out.n);
  out.main_hal_pct = static_cast<double>(mismatched) / n;
  out.extra_num_hal = static_cast<double>(claims) / n;
  out.overall_hal_pct = static_cast<double>(any) / n;
  return out;
}

HqhResult hqh_metrics(const std::vector<JudgeVerdict>& verdicts, const std::vector<Sample>& samples) {
  std::map<std::string, const JudgeVerdict*> by_sample;
  std::vector<std::string> problems;
  for (const auto& v : verdicts) {
    if (v.extra_claim_count < 0 || v.extra_claim_count != static_cast<int>(v.extra_claims.size())) {
      throw Error(Errc::SchemaViolation, "extra_claim_count", v.sample_id);
    }
    if (!by_sample.emplace(v.sample_id, &v).second) problems.push_back("duplicate:" + v.sample_id);
  }
  std::set<std::string> wanted;
  for (const auto& s : samples) {
    wanted.insert(s.sample_id);
    if (!by_sample.count(s.sample_id)) problems.push_back("missing:" + s.sample_id);
  }
  for (const auto& [id, _] : by_sample) {
    if (!wanted.count(id)) problems.push_back("unexpected:" + id);
  }
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : ",") + p;
    throw Error(Errc::CoverageGap, joined);
  }
  if (samples.empty()) throw Error(Errc::EmptySet, "verdicts");

  std::vector<const JudgeVerdict*> all;
  std::map<Dimension, std::vector<const JudgeVerdict*>> by_dim;
  std::map<Level, std::vector<const JudgeVerdict*>> by_level;
  for (const auto& s : samples) {
    const auto* v = by_sample.at(s.sample_id);
    all.push_back(v);
    if (s.dimension) by_dim[*s.dimension].push_back(v);
    if (s.level) {
      by_level[*s.level].push_back(v);
    } else if (s.dimension) {
      by_level[level_of(*s.dimension)].push_back(v);
    }
  }
  HqhResult out;
  out.overall = aggregate(all);
  for (const auto& [d, vs] : by_dim) out.per_dimension[d] = aggregate(vs);
  for (const auto& [l, vs] : by_level) out.per_level[l] = aggregate(vs);
  return out;
}

}  // namespace hqm::metrics
