#include "cpa_cli/config.hpp"

#include <charconv>
#include <limits>
#include <cstdio>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "cpa/errors.hpp"

namespace cpa::cli {

namespace {

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(key + ": expected a number, got '" + raw + "'");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  }
  return v;
}

Site parse_site(const std::string& key, const std::string& raw) {
  const auto parts = split(raw, ',');
  if (parts.empty() || parts.size() > static_cast<std::size_t>(kMaxDim)) {
    throw ConfigError(key + ": bad site '" + raw + "'");
  }
  Site x(static_cast<int>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const long long c = parse_integer(key, parts[i]);
    if (c < -(1LL << 20) || c > (1LL << 20)) throw ConfigError(key + ": coordinate out of range");
    x[static_cast<int>(i)] = static_cast<int>(c);
  }
  return x;
}

}  // namespace

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

RunConfig::RunConfig(std::map<std::string, std::string> values) {
  for (auto& [k, v] : values) set(k, v);
}

RunConfig RunConfig::from_file(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config entry '" + section + "' is outside a section");
    for (const auto& [key, value] : body) c.set(section + "." + key, value.data());
  }
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  const auto dot = k.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == k.size()) {
    throw ConfigError("config key '" + key + "' must look like section.key");
  }
  const std::string v = trim(value);
  if (v.empty()) {
    values_.erase(k);
  } else {
    values_[k] = v;
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like section.key=value");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

const std::string* RunConfig::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double RunConfig::number(const std::string& key, double fallback) const {
  const auto* v = find(key);
  return v ? parse_double(key, *v) : fallback;
}

long long RunConfig::integer(const std::string& key, long long fallback) const {
  const auto* v = find(key);
  return v ? parse_integer(key, *v) : fallback;
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
}

std::vector<double> RunConfig::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& part : split(*v, ',')) out.push_back(parse_double(key, part));
  return out;
}

std::vector<int> RunConfig::integers(const std::string& key, const std::vector<int>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<int> out;
  for (const auto& part : split(*v, ',')) out.push_back(static_cast<int>(parse_integer(key, part)));
  return out;
}

std::vector<Site> RunConfig::sites(const std::string& key, const std::vector<Site>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<Site> out;
  for (const auto& part : split(*v, ';')) out.push_back(parse_site(key, part));
  if (out.empty()) throw ConfigError(key + ": empty site list");
  return out;
}

Site RunConfig::site(const std::string& key, const Site& fallback) const {
  const auto* v = find(key);
  return v ? parse_site(key, *v) : fallback;
}

ModelParams RunConfig::model() const {
  const auto d = integer("model.dimension", 1);
  if (d < 1 || d > kMaxDim) throw ConfigError("model.dimension must be 1, 2 or 3");
  AgeProfile profile{numbers("model.profile_head", {0.0}), number("model.profile_tail", 4.0)};
  try {
    return ModelParams::make(static_cast<int>(d), profile, number("model.gamma", 2.0),
                             number("model.base_rate", -1.0));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

RunSettings RunConfig::run() const {
  RunSettings s;
  const auto seed = integer("run.seed", 1);
  const auto trials = integer("run.trials", 1000);
  const auto threads = integer("run.threads", 1);
  if (seed < 0 || trials < 1 || threads < 1) throw ConfigError("run: seed >= 0, trials >= 1 and threads >= 1");
  s.seed = static_cast<std::uint64_t>(seed);
  s.trials = static_cast<std::uint64_t>(trials);
  s.threads = static_cast<int>(threads);
  s.t_max = number("run.t_max", 50.0);
  s.m_conf = number("run.m_conf", 0.0);
  s.margin = static_cast<int>(integer("run.margin", 4));
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("run: ") + e.what());
  }
  return s;
}

BlockGeometry RunConfig::geometry() const {
  BlockGeometry g;
  g.n = static_cast<int>(integer("geometry.n", 1));
  g.a = static_cast<int>(integer("geometry.a", 2));
  g.b = static_cast<int>(integer("geometry.b", 1));
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("geometry: ") + e.what());
  }
  return g;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (k == "run.threads" || k == "run.output") continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

std::string RunConfig::digest() const {
  const std::string text = canonical();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha1(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace cpa::cli
