#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hqm {

/// INI-style key-value document:
///
///   # comment            (; also starts a comment)
///   [section]            section names may contain dots, e.g. [model.llava]
///   key = value          whitespace around key and value is trimmed
///
/// Keys before the first section header land in section "". Duplicate keys
/// within a section are rejected.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>");
  static Config load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  bool has_section(const std::string& section) const;
  /// Section names starting with `prefix`, in file order.
  std::vector<std::string> sections_with_prefix(const std::string& prefix) const;
  const std::map<std::string, std::string>& section(const std::string& name) const;

  /// Directory of the file the config was loaded from; relative paths in
  /// values resolve against it.
  const std::filesystem::path& base_dir() const { return base_dir_; }
  std::filesystem::path resolve_path(const std::string& value) const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::filesystem::path base_dir_;
  std::string origin_;
};

}  // namespace hqm
