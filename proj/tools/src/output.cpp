#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cpa_cli/cli.hpp"

namespace cpa::cli {

OutputSet::OutputSet(std::filesystem::path dir, std::string command, const RunConfig& config)
    : dir_(std::move(dir)), command_(std::move(command)), config_(config) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputSet::write(const std::string& name, const std::function<void(std::ostream&)>& body) {
  std::ostringstream text;
  body(text);
  const std::string csv = text.str();
  const std::filesystem::path path = dir_ / name;
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << csv;
  }

  const std::string header = csv.substr(0, csv.find('\n'));
  std::uint64_t lines = 0;
  for (char c : csv) lines += c == '\n';
  nlohmann::json meta;
  meta["file"] = name;
  meta["command"] = command_;
  meta["generator"] = "cpa 0.1.0";
  meta["columns"] = split(header, ',');
  meta["rows"] = lines > 0 ? lines - 1 : 0;
  meta["config_sha1"] = config_.digest();
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_.values()) {
    if (k != "run.threads" && k != "run.output") cfg[k] = v;
  }
  meta["config"] = cfg;
  const RunSettings run = config_.run();
  meta["seed"] = run.seed;
  meta["trials"] = run.trials;
  meta["t_max"] = run.t_max;
  const ModelParams model = config_.model();
  meta["params"] = {{"dimension", model.dimension},
                    {"profile_head", model.profile.head},
                    {"profile_tail", model.profile.tail},
                    {"gamma", model.gamma},
                    {"base_rate", model.base_rate}};
  std::ofstream side(path.string() + ".meta.json", std::ios::binary);
  if (!side) throw ConfigError("cannot write sidecar for " + path.string());
  side << meta.dump(2) << '\n';
  files_.push_back(path);
}

}  // namespace cpa::cli
