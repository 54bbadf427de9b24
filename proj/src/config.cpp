#include "hqm/config.hpp"

#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hqm/datamodel.hpp"
#include "hqm/error.hpp"
#include "hqm/text.hpp"

namespace hqm {

Config Config::parse(const std::string& text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  // ini_parser only knows ';' comments.
  std::string normalized;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') line[first] = ';';
    normalized += line;
    normalized += '\n';
  }
  std::istringstream in(normalized);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::Config, origin, e.what());
  }
  Config cfg;
  cfg.origin_ = origin;
  for (const auto& [name, child] : tree) {
    if (child.empty()) {
      // top-level key
      if (cfg.sections_.find("") == cfg.sections_.end()) cfg.order_.push_back("");
      cfg.sections_[""][name] = text::trim(child.data());
      continue;
    }
    cfg.order_.push_back(name);
    auto& sec = cfg.sections_[name];
    for (const auto& [key, value] : child) sec[key] = text::trim(value.data());
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  auto cfg = parse(read_text(path), path.string());
  cfg.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return cfg;
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::get_or(const std::string& section, const std::string& key, const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

std::string Config::require(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v) throw Error(Errc::Config, "[" + section + "] " + key, "missing in " + origin_);
  return *v;
}

long long Config::get_int(const std::string& section, const std::string& key, long long fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const long long out = std::stoll(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw Error(Errc::Config, "[" + section + "] " + key, "expected integer, got '" + *v + "'");
  }
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double out = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw Error(Errc::Config, "[" + section + "] " + key, "expected number, got '" + *v + "'");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  const auto lower = text::to_lower(*v);
  if (lower == "true" || lower == "yes" || lower == "1" || lower == "on") return true;
  if (lower == "false" || lower == "no" || lower == "0" || lower == "off") return false;
  throw Error(Errc::Config, "[" + section + "] " + key, "expected boolean, got '" + *v + "'");
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) != 0; }

std::vector<std::string> Config::sections_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& name : order_) {
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  }
  return out;
}

const std::map<std::string, std::string>& Config::section(const std::string& name) const {
  static const std::map<std::string, std::string> kEmpty;
  const auto it = sections_.find(name);
  return it == sections_.end() ? kEmpty : it->second;
}

std::filesystem::path Config::resolve_path(const std::string& value) const {
  std::filesystem::path p(value);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

}  // namespace hqm
