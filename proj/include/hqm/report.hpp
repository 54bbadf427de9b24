#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hqm/datamodel.hpp"

namespace hqm::report {

enum class Format { json, csv, markdown };
std::string_view to_string(Format f) noexcept;
Format parse_format(std::string_view s);

/// Leaderboards for `tables`, in input order. Markdown sorts rows by each
/// table's orientation and adds per-dimension columns when present; tables
/// sharing a metric are compared against the first of their kind in a
/// rank-delta appendix. CSV is long-form (one row per table, scope, model);
/// numbers in CSV and JSON use the shortest round-trip representation.
/// InvalidArgument on an empty table list.
std::string render(const std::vector<ScoreTable>& tables, Format format);

/// render() written atomically to `out`. Io on write failure.
void emit_report(const std::vector<ScoreTable>& tables, Format format, const std::filesystem::path& out);

/// Shortest decimal that parses back to the same double.
std::string format_number(double v);

}  // namespace hqm::report
