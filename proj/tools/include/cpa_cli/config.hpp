#pragma once

// Run configuration: INI sections with `key = value` lines, flattened to
// "section.key" entries. Command-line overrides replace entries before any
// value is read, and every read goes through a typed getter with a default.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpa/experiments.hpp"
#include "cpa/renormalization.hpp"

namespace cpa::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(std::map<std::string, std::string> values);

  /// Reads an INI file; throws ConfigError when it is missing or malformed.
  static RunConfig from_file(const std::string& path);

  /// `key` is "section.key"; an empty value removes the entry.
  void set(const std::string& key, const std::string& value);
  /// "section.key=value".
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) const;
  /// Sites separated by ';', coordinates by ','.
  std::vector<Site> sites(const std::string& key, const std::vector<Site>& fallback) const;
  Site site(const std::string& key, const Site& fallback) const;

  // Typed views of the common sections.
  ModelParams model() const;
  RunSettings run() const;
  BlockGeometry geometry() const;
  std::string output_dir() const { return text("run.output", "."); }

  /// One "section.key = value" line per entry in key order, excluding
  /// run.threads and run.output, which do not affect results.
  std::string canonical() const;
  /// Hex SHA-1 of canonical().
  std::string digest() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  const std::string* find(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

}  // namespace cpa::cli
