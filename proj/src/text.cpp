#include "hqm/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include <openssl/evp.h>

namespace hqm::text {

namespace {

constexpr std::array<std::string_view, 21> kNumberWords{
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && is_space(*b)) ++b;
  while (e != b && is_space(*(e - 1))) --e;
  return std::string(b, e);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string> normalized_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  for (const auto& t : normalized_tokens(s)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cur.push_back(s[i]);
    const bool terminator = s[i] == '.' || s[i] == '!' || s[i] == '?';
    if (terminator && (i + 1 == s.size() || is_space(s[i + 1]))) {
      auto t = trim(cur);
      if (!t.empty()) out.push_back(std::move(t));
      cur.clear();
    }
  }
  auto t = trim(cur);
  if (!t.empty()) out.push_back(std::move(t));
  return out;
}

std::optional<int> number_value(std::string_view token) {
  const auto lower = to_lower(token);
  for (std::size_t i = 0; i < kNumberWords.size(); ++i) {
    if (kNumberWords[i] == lower) return static_cast<int>(i);
  }
  if (lower.empty() || lower.size() > 9) return std::nullopt;
  int value = 0;
  const auto [ptr, ec] = std::from_chars(lower.data(), lower.data() + lower.size(), value);
  if (ec != std::errc{} || ptr != lower.data() + lower.size()) return std::nullopt;
  return value;
}

std::string number_word(int n) {
  if (n >= 0 && n < static_cast<int>(kNumberWords.size())) return std::string(kNumberWords[static_cast<std::size_t>(n)]);
  return std::to_string(n);
}

bool starts_with_yes_no_stem(std::string_view question) {
  static constexpr std::string_view kStems[] = {"is", "are", "does", "do", "was", "were", "can"};
  const auto tokens = normalized_tokens(question);
  if (tokens.empty()) return false;
  return std::find(std::begin(kStems), std::end(kStems), tokens.front()) != std::end(kStems);
}

std::string capitalize_first(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string lower_first(std::string_view s) {
  std::string out(s);
  // Keep acronyms ("LED", "TV") intact.
  if (out.size() >= 2 && std::isupper(static_cast<unsigned char>(out[1]))) return out;
  if (!out.empty()) out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace hqm::text
