#include "setstorm/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

namespace setstorm {

ConfigTree parse_config(std::string_view text) {
  ConfigTree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("malformed config: " + e.message() + " (line " + std::to_string(e.line()) +
                      ")");
  }
  for (const auto& [key, child] : tree)
    if (child.empty() && !child.data().empty())
      throw ConfigError("malformed config: key '" + key + "' outside any section");
  return tree;
}

ConfigTree read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

const ConfigTree* find_section(const ConfigTree& tree, const std::string& name) {
  auto it = tree.find(name);
  return it == tree.not_found() ? nullptr : &it->second;
}

SectionReader::SectionReader(const ConfigTree* section, std::string name)
    : section_(section), name_(std::move(name)) {}

const std::string* SectionReader::raw(const std::string& key) {
  known_.push_back(key);
  if (!section_) return nullptr;
  auto it = section_->find(key);
  return it == section_->not_found() ? nullptr : &it->second.data();
}

std::optional<double> SectionReader::number(const std::string& key) {
  const std::string* s = raw(key);
  if (!s) return std::nullopt;
  double v = 0.0;
  auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || end != s->data() + s->size())
    throw ConfigError("[" + name_ + "] " + key + ": '" + *s + "' is not a number");
  return v;
}

std::optional<std::uint64_t> SectionReader::count(const std::string& key) {
  const std::string* s = raw(key);
  if (!s) return std::nullopt;
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || end != s->data() + s->size())
    throw ConfigError("[" + name_ + "] " + key + ": '" + *s + "' is not a non-negative integer");
  return v;
}

std::optional<std::string> SectionReader::text(const std::string& key) {
  const std::string* s = raw(key);
  if (!s) return std::nullopt;
  return *s;
}

std::optional<bool> SectionReader::flag(const std::string& key) {
  const std::string* s = raw(key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  throw ConfigError("[" + name_ + "] " + key + ": '" + *s + "' is not a boolean");
}

void SectionReader::check_unknown() const {
  if (!section_) return;
  for (const auto& [key, value] : *section_)
    if (std::find(known_.begin(), known_.end(), key) == known_.end())
      throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
}

}  // namespace setstorm
