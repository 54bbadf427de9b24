#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hqm::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Whitespace tokenization, punctuation kept. This is the word count used
/// for average response length.
std::vector<std::string> split_whitespace(std::string_view s);

/// Lowercase, every non-alphanumeric byte becomes a separator.
std::vector<std::string> normalized_tokens(std::string_view s);
std::string normalize(std::string_view s);

/// Sentences split on . ! ? followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view s);

/// "zero".."twenty" and digit strings -> value.
std::optional<int> number_value(std::string_view token);
/// 0..20 -> "zero".."twenty"; larger values as digits.
std::string number_word(int n);

/// Starts with a closed-ended stem: Is, Are, Does, Do, Was, Were, Can.
bool starts_with_yes_no_stem(std::string_view question);

std::string capitalize_first(std::string_view s);
std::string lower_first(std::string_view s);

std::string sha256_hex(std::string_view data);

}  // namespace hqm::text
