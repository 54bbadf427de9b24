#pragma once

#include <optional>
#include <string_view>

namespace hqm::resources {

/// Bundled resource by path relative to resources/, e.g.
/// "prompts/main_match.v1.txt".
std::optional<std::string_view> get(std::string_view name);

}  // namespace hqm::resources
