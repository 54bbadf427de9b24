#pragma once

#include <optional>
#include <string>
#include <string_view>

// Deterministic, table-driven instruction rewrites. They back the offline
// paraphraser and the template-first negation of yes/no questions.

namespace hqm::rewrite {

/// Leading-phrase synonym table first ("Describe" -> "Provide a description
/// of", ...), then single-word synonyms, then a fixed framing prefix. Always
/// returns text different from a non-empty input.
std::string template_paraphrase(std::string_view text);

/// Negates closed-ended question stems:
///   "Is there a X ..."  -> "Is there no X ..."   (and back)
///   "Are there X ..."   -> "Are there no X ..."  (and back)
///   "Is the X Y ..."    -> "Is the X not Y ..."  (and back)
///   "Does/Do/Can/Was/Were/Are the X ..." -> "... the X not ..."
///   "Is it/this/that Y" -> "Is it not Y"
/// Returns nullopt for stems outside the table.
std::optional<std::string> template_negate(std::string_view question);

}  // namespace hqm::rewrite
