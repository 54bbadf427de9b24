#include "hqm/rewrite.hpp"

#include <array>
#include <cctype>
#include <vector>

#include "hqm/text.hpp"

namespace hqm::rewrite {

namespace {

struct Rule {
  std::string_view from;
  std::string_view to;
};

constexpr std::array<Rule, 8> kLeadingPhrases{{
    {"provide a description of", "describe"},
    {"describe", "provide a description of"},
    {"give a detailed description of", "describe in detail"},
    {"how many", "tell me how many"},
    {"what color is", "which color is"},
    {"where is", "in which location is"},
    {"which", "what"},
    {"explain", "describe"},
}};

constexpr std::array<Rule, 8> kWordSynonyms{{
    {"image", "picture"},
    {"picture", "image"},
    {"photo", "picture"},
    {"visible", "shown"},
    {"located", "positioned"},
    {"larger", "bigger"},
    {"bigger", "larger"},
    {"shown", "visible"},
}};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool starts_upper(std::string_view s) {
  return !s.empty() && std::isupper(static_cast<unsigned char>(s.front()));
}

std::string match_case(std::string_view replacement, bool upper) {
  return upper ? text::capitalize_first(replacement) : std::string(replacement);
}

// Case-insensitive whole-word search for `word` in `s`.
std::size_t find_word(std::string_view s, std::string_view word) {
  const auto lower = text::to_lower(s);
  std::size_t pos = 0;
  while ((pos = lower.find(word, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
    const std::size_t end = pos + word.size();
    const bool right_ok = end == lower.size() || !is_word_char(lower[end]);
    if (left_ok && right_ok) return pos;
    pos = end;
  }
  return std::string::npos;
}

bool in(std::string_view w, std::initializer_list<std::string_view> set) {
  for (const auto s : set) {
    if (s == w) return true;
  }
  return false;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool starts_with_vowel(std::string_view w) {
  return !w.empty() && in(std::string_view(&w.front(), 1), {"a", "e", "i", "o", "u"});
}

}  // namespace

std::string template_paraphrase(std::string_view input) {
  const std::string source = text::trim(input);
  if (source.empty()) return {};
  const auto lower = text::to_lower(source);

  for (const auto& rule : kLeadingPhrases) {
    if (lower.rfind(rule.from, 0) == 0 &&
        (lower.size() == rule.from.size() || !is_word_char(lower[rule.from.size()]))) {
      return match_case(rule.to, starts_upper(source)) + source.substr(rule.from.size());
    }
  }
  for (const auto& rule : kWordSynonyms) {
    const auto pos = find_word(source, rule.from);
    if (pos == std::string::npos) continue;
    const bool upper = std::isupper(static_cast<unsigned char>(source[pos]));
    return source.substr(0, pos) + match_case(rule.to, upper) + source.substr(pos + rule.from.size());
  }
  return "Looking at the image, " + text::lower_first(source);
}

std::optional<std::string> template_negate(std::string_view question) {
  auto tokens = text::split_whitespace(question);
  if (tokens.size() < 3) return std::nullopt;
  std::vector<std::string> lower;
  for (const auto& t : tokens) lower.push_back(text::to_lower(t));

  const auto& stem = lower[0];
  if (in(stem, {"is", "are", "was", "were"}) && lower[1] == "there") {
    const auto& det = lower[2];
    if (det == "no") {
      if (tokens.size() < 4) return std::nullopt;
      if (in(stem, {"is", "was"})) {
        tokens[2] = starts_with_vowel(lower[3]) ? "an" : "a";
      } else {
        tokens[2] = "any";
      }
      return join(tokens);
    }
    if (in(det, {"a", "an", "any"})) {
      tokens[2] = "no";
      return join(tokens);
    }
    if (det == "not") {
      tokens.erase(tokens.begin() + 2);
      return join(tokens);
    }
    tokens.insert(tokens.begin() + 2, "not");
    return join(tokens);
  }

  const bool aux = in(stem, {"is", "are", "was", "were", "does", "do", "did", "can", "has", "have"});
  if (!aux) return std::nullopt;

  if (in(lower[1], {"the", "this", "that", "these", "those"})) {
    if (tokens.size() < 4) return std::nullopt;
    if (lower[3] == "not") {
      tokens.erase(tokens.begin() + 3);
    } else {
      tokens.insert(tokens.begin() + 3, "not");
    }
    return join(tokens);
  }
  if (in(lower[1], {"it", "he", "she", "they"})) {
    if (lower[2] == "not") {
      tokens.erase(tokens.begin() + 2);
    } else {
      tokens.insert(tokens.begin() + 2, "not");
    }
    return join(tokens);
  }
  return std::nullopt;
}

}  // namespace hqm::rewrite
