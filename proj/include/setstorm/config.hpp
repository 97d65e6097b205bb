#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace setstorm {

/// Parsed INI document: top-level children are sections, their children keys.
using ConfigTree = boost::property_tree::ptree;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ConfigTree parse_config(std::string_view text);
ConfigTree read_config_file(const std::string& path);

/// Typed accessors over one section. Every key read is recorded so that
/// `check_unknown` can reject typos.
class SectionReader {
 public:
  SectionReader(const ConfigTree* section, std::string name);

  std::optional<double> number(const std::string& key);
  std::optional<std::uint64_t> count(const std::string& key);
  std::optional<std::string> text(const std::string& key);
  std::optional<bool> flag(const std::string& key);

  /// Throws ConfigError naming the first key that was never read.
  void check_unknown() const;

 private:
  const std::string* raw(const std::string& key);

  const ConfigTree* section_;
  std::string name_;
  std::vector<std::string> known_;
};

/// Section by exact name; nullptr when absent.
const ConfigTree* find_section(const ConfigTree& tree, const std::string& name);

}  // namespace setstorm
