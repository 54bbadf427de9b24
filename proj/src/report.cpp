#include "hqm/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "hqm/error.hpp"
#include "hqm/quality.hpp"

namespace hqm::report {

std::string_view to_string(Format f) noexcept {
  switch (f) {
    case Format::json:
      return "json";
    case Format::csv:
      return "csv";
    case Format::markdown:
      return "markdown";
  }
  return "?";
}

Format parse_format(std::string_view s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  if (s == "markdown" || s == "md") return Format::markdown;
  throw Error(Errc::InvalidArgument, "format", "expected json, csv or markdown, got " + std::string(s));
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

struct Comparison {
  std::size_t base;
  std::size_t other;
};

// Each later table with the same metric is compared to the first one.
std::vector<Comparison> comparisons(const std::vector<ScoreTable>& tables) {
  std::vector<Comparison> out;
  for (std::size_t j = 1; j < tables.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (tables[i].metric_name == tables[j].metric_name && tables[i].orientation == tables[j].orientation) {
        if (tables[i].roster() == tables[j].roster()) out.push_back({i, j});
        break;
      }
    }
  }
  return out;
}

// Dimension names first in canonical order, then levels, then anything else.
std::vector<std::string> scope_columns(const ScoreTable& t) {
  std::vector<std::string> cols;
  if (!t.per_dimension) return cols;
  const auto& pd = *t.per_dimension;
  for (const auto d : kAllDimensions) {
    if (pd.count(std::string(to_string(d)))) cols.emplace_back(to_string(d));
  }
  for (const auto l : kAllLevels) {
    if (pd.count(std::string(to_string(l)))) cols.emplace_back(to_string(l));
  }
  for (const auto& [name, _] : pd) {
    if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);
  }
  return cols;
}

std::vector<std::pair<std::string, int>> ordered(const ScoreTable& t) {
  const auto r = quality::ranks(t);
  std::vector<std::pair<std::string, int>> rows(r.begin(), r.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return rows;
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render_json(const std::vector<ScoreTable>& tables) {
  // Numbers are written as raw text so they match the CSV byte for byte.
  std::ostringstream o;
  const auto str = [](const std::string& s) { return json(s).dump(); };
  o << "{\n  \"tables\": [";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& t = tables[i];
    o << (i ? "," : "") << "\n    {\n";
    o << "      \"benchmark_id\": " << str(t.benchmark_id) << ",\n";
    o << "      \"run_id\": " << str(t.run_id) << ",\n";
    o << "      \"metric_name\": " << str(t.metric_name) << ",\n";
    o << "      \"orientation\": " << str(std::string(to_string(t.orientation))) << ",\n";
    o << "      \"leaderboard\": [";
    const auto rows = ordered(t);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& [model, rank] = rows[k];
      o << (k ? "," : "") << "\n        {\"rank\": " << rank << ", \"model_id\": " << str(model)
        << ", \"score\": " << format_number(t.scores.at(model));
      const auto cols = scope_columns(t);
      if (!cols.empty()) {
        o << ", \"per_dimension\": {";
        bool first = true;
        for (const auto& c : cols) {
          const auto& col = t.per_dimension->at(c);
          const auto it = col.find(model);
          if (it == col.end()) continue;
          o << (first ? "" : ", ") << str(c) << ": " << format_number(it->second);
          first = false;
        }
        o << "}";
      }
      o << "}";
    }
    o << "\n      ]\n    }";
  }
  o << "\n  ],\n  \"rank_deltas\": [";
  const auto comps = comparisons(tables);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& a = tables[comps[i].base];
    const auto& b = tables[comps[i].other];
    o << (i ? "," : "") << "\n    {\"metric_name\": " << str(a.metric_name) << ", \"run_a\": " << str(a.run_id)
      << ", \"run_b\": " << str(b.run_id) << ", \"rows\": [";
    const auto rows = quality::leaderboard_delta(a, b);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows[k];
      o << (k ? "," : "") << "\n      {\"model_id\": " << str(r.model_id) << ", \"score_a\": " << format_number(r.score_a)
        << ", \"score_b\": " << format_number(r.score_b) << ", \"rank_a\": " << r.rank_a
        << ", \"rank_b\": " << r.rank_b << ", \"delta\": " << r.delta << "}";
    }
    o << "\n    ]}";
  }
  o << "\n  ]\n}\n";
  return o.str();
}

std::string render_csv(const std::vector<ScoreTable>& tables) {
  std::string out = "benchmark_id,run_id,metric_name,orientation,scope,model_id,rank,score\n";
  for (const auto& t : tables) {
    const auto prefix = csv_field(t.benchmark_id) + "," + csv_field(t.run_id) + "," + csv_field(t.metric_name) + "," +
                        std::string(to_string(t.orientation)) + ",";
    for (const auto& [model, rank] : ordered(t)) {
      out += prefix + "overall," + csv_field(model) + "," + std::to_string(rank) + "," +
             format_number(t.scores.at(model)) + "\n";
    }
    for (const auto& c : scope_columns(t)) {
      for (const auto& [model, v] : t.per_dimension->at(c)) {
        out += prefix + csv_field(c) + "," + csv_field(model) + ",," + format_number(v) + "\n";
      }
    }
  }
  return out;
}

std::string render_markdown(const std::vector<ScoreTable>& tables) {
  std::string out = "# Leaderboard\n";
  for (const auto& t : tables) {
    out += "\n## " + t.benchmark_id + " / " + t.run_id + " / " + t.metric_name + " (" +
           (t.orientation == Orientation::higher_better ? "higher is better" : "lower is better") + ")\n\n";
    const auto cols = scope_columns(t);
    out += "| Rank | Model | " + t.metric_name + " |";
    for (const auto& c : cols) out += " " + c + " |";
    out += "\n|---:|---|---:|";
    for (std::size_t i = 0; i < cols.size(); ++i) out += "---:|";
    out += "\n";
    for (const auto& [model, rank] : ordered(t)) {
      out += "| " + std::to_string(rank) + " | " + model + " | " + fmt3(t.scores.at(model)) + " |";
      for (const auto& c : cols) {
        const auto& col = t.per_dimension->at(c);
        const auto it = col.find(model);
        out += " " + (it == col.end() ? std::string("-") : fmt3(it->second)) + " |";
      }
      out += "\n";
    }
  }
  const auto comps = comparisons(tables);
  if (!comps.empty()) {
    out += "\n## Appendix: rank deltas\n";
    for (const auto& c : comps) {
      const auto& a = tables[c.base];
      const auto& b = tables[c.other];
      out += "\n### " + a.metric_name + ": " + a.run_id + " -> " + b.run_id + "\n\n";
      out += "| Model | Score A | Score B | Rank A | Rank B | Delta |\n|---|---:|---:|---:|---:|---:|\n";
      for (const auto& r : quality::leaderboard_delta(a, b)) {
        out += "| " + r.model_id + " | " + fmt3(r.score_a) + " | " + fmt3(r.score_b) + " | " + std::to_string(r.rank_a) +
               " | " + std::to_string(r.rank_b) + " | " + (r.delta > 0 ? "+" : "") + std::to_string(r.delta) + " |\n";
      }
    }
  }
  return out;
}

}  // namespace

std::string render(const std::vector<ScoreTable>& tables, Format format) {
  if (tables.empty()) throw Error(Errc::InvalidArgument, "tables", "nothing to report");
  for (const auto& t : tables) validate(t);
  switch (format) {
    case Format::json:
      return render_json(tables);
    case Format::csv:
      return render_csv(tables);
    case Format::markdown:
      return render_markdown(tables);
  }
  return {};
}

void emit_report(const std::vector<ScoreTable>& tables, Format format, const std::filesystem::path& out) {
  write_text_atomic(render(tables, format), out);
}

}  // namespace hqm::report
