#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cpa_cli/cli.hpp"

namespace fs = std::filesystem;
using namespace cpa::cli;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "cpa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cpa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& body) {
    const fs::path p = dir_ / "run.ini";
    std::ofstream(p) << body;
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, FlattensSectionsAndAppliesOverrides) {
  RunConfig c(std::map<std::string, std::string>{{"model.gamma", "3"}, {"run.seed", "7"}});
  c.apply_override("model.gamma=1.5");
  c.apply_override("run.seed=");
  EXPECT_DOUBLE_EQ(c.number("model.gamma", 0.0), 1.5);
  EXPECT_FALSE(c.has("run.seed"));
  EXPECT_EQ(c.run().seed, 1u);
  EXPECT_THROW(c.apply_override("gamma=2"), ConfigError);
  EXPECT_THROW(c.apply_override("model.gamma"), ConfigError);
}

TEST(Config, ParsesListsAndSites) {
  RunConfig c(std::map<std::string, std::string>{{"a.xs", "1, 2.5 ,inf"}, {"a.sites", "1,0; -2,3"}, {"a.bad", "1,x"}});
  const auto xs = c.numbers("a.xs", {});
  ASSERT_EQ(xs.size(), 3u);
  EXPECT_EQ(xs[1], 2.5);
  EXPECT_TRUE(std::isinf(xs[2]));
  const auto sites = c.sites("a.sites", {});
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_EQ(sites[1][0], -2);
  EXPECT_EQ(sites[1][1], 3);
  EXPECT_THROW(c.sites("a.bad", {}), ConfigError);
  EXPECT_THROW(c.integer("a.xs", 0), ConfigError);
}

TEST(Config, ModelDefaultsAndValidation) {
  const auto p = RunConfig().model();
  EXPECT_EQ(p.dimension, 1);
  EXPECT_EQ(p.profile.rate(1), 0.0);
  EXPECT_EQ(p.profile.rate(2), 4.0);
  EXPECT_EQ(p.gamma, 2.0);
  EXPECT_THROW(RunConfig(std::map<std::string, std::string>{{"model.dimension", "4"}}).model(), ConfigError);
  EXPECT_THROW(RunConfig(std::map<std::string, std::string>{{"model.gamma", "-1"}}).model(), ConfigError);
  EXPECT_THROW(RunConfig(std::map<std::string, std::string>{{"run.trials", "0"}}).run(), ConfigError);
}

TEST(Config, DigestIgnoresThreadsAndOutput) {
  RunConfig a(std::map<std::string, std::string>{{"model.gamma", "2"}, {"run.threads", "1"}, {"run.output", "x"}});
  RunConfig b(std::map<std::string, std::string>{{"model.gamma", "2"}, {"run.threads", "8"}});
  RunConfig c(std::map<std::string, std::string>{{"model.gamma", "3"}});
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_NE(a.digest(), c.digest());
  EXPECT_EQ(a.digest().size(), 40u);
}

TEST_F(CliTest, UnknownSubcommandIsAConfigError) {
  const Outcome r = run({"frobnicate"});
  EXPECT_EQ(r.code, kConfigError);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(CliTest, UnreadableConfigIsAConfigError) {
  EXPECT_EQ(run({"survive", "--config", (dir_ / "missing.ini").string()}).code, kConfigError);
  const auto cfg = write_config("[model]\ngamma = two\n");
  EXPECT_EQ(run({"survive", "--config", cfg.string(), "--out", dir_.string()}).code, kConfigError);
}

TEST_F(CliTest, SurviveWritesSchemaAndSidecar) {
  const auto cfg = write_config("[model]\nprofile_tail = 4\ngamma = 2\n\n[run]\nseed = 3\ntrials = 50\nt_max = 5\n");
  const Outcome r = run({"survive", "--config", cfg.string(), "--out", dir_.string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  const std::string csv = slurp(dir_ / "survival.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "trial,seed,alive_at_Tmax");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 51);

  const auto meta = nlohmann::json::parse(slurp(dir_ / "survival.csv.meta.json"));
  EXPECT_EQ(meta["command"], "survive");
  EXPECT_EQ(meta["rows"], 50);
  EXPECT_EQ(meta["columns"], nlohmann::json({"trial", "seed", "alive_at_Tmax"}));
  EXPECT_EQ(meta["config"]["run.seed"], "3");
  EXPECT_EQ(meta["seed"], 3);
  EXPECT_EQ(meta["t_max"], 5.0);
  EXPECT_EQ(meta["params"]["profile_tail"], 4.0);
  EXPECT_EQ(meta["params"]["gamma"], 2.0);
  EXPECT_EQ(meta["config_sha1"], RunConfig::from_file(cfg.string()).digest());
  EXPECT_TRUE(fs::exists(dir_ / "survival_summary.csv"));
}

TEST_F(CliTest, OutputsDoNotDependOnThreads) {
  const std::vector<std::string> common{"--seed", "11", "--trials", "40", "--t-max", "8"};
  for (const std::string threads : {"1", "4"}) {
    auto args = std::vector<std::string>{"sigma", "--threads", threads, "--out", (dir_ / threads).string(),
                                         "--set", "sigma.n_list=2,4"};
    args.insert(args.end(), common.begin(), common.end());
    ASSERT_EQ(run(args).code, kOk);
  }
  for (const char* f : {"sigma.csv", "sigma_gap.csv", "sigma.csv.meta.json"}) {
    EXPECT_EQ(slurp(dir_ / "1" / f), slurp(dir_ / "4" / f)) << f;
  }
}

TEST_F(CliTest, OracleMatchesFrozenValue) {
  const Outcome r = run({"oracle", "--out", dir_.string(), "--set", "model.profile_head=0,3", "--set",
                     "model.profile_tail=3", "--set", "model.gamma=1"});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::istringstream in(slurp(dir_ / "oracle.csv"));
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "kind,x0,p");
  EXPECT_NEAR(std::stod(row.substr(row.rfind(',') + 1)), 0.4735261004353801, 1e-9);
}

TEST_F(CliTest, BadParameterValuesExitTwo) {
  EXPECT_EQ(run({"perco", "--out", dir_.string(), "--set", "perco.p=1.5"}).code, kConfigError);
  EXPECT_EQ(run({"shape", "--out", dir_.string(), "--trials", "1"}).code, kConfigError);
  EXPECT_EQ(run({"K", "--out", dir_.string(), "--set", "K.site=1,1"}).code, kConfigError);
}

TEST_F(CliTest, TraceWritesTrajectoryAndEnvironment) {
  const Outcome r = run({"trace", "--t", "1", "--out", dir_.string(), "--set", "trace.radius=4"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const std::string env = slurp(dir_ / "environment.csv");
  EXPECT_EQ(env.substr(0, env.find('\n')), "t,kind,x0,y0,mark");
  EXPECT_TRUE(fs::exists(dir_ / "trajectory.csv.meta.json"));
}

TEST_F(CliTest, QuickValidatePasses) {
  const Outcome r = run({"validate", "--quick", "--out", dir_.string(), "--set", "validate.t_max=5"});
  EXPECT_EQ(r.code, kOk) << r.out << r.err;
  const std::string csv = slurp(dir_ / "validate.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,scenarios,violations");
  EXPECT_NE(csv.find("wilson_coverage"), std::string::npos);
}

TEST_F(CliTest, PlotInputsHaveDocumentedHeaders) {
  const std::string out = dir_.string();
  ASSERT_EQ(run({"trace", "--t", "2", "--out", out}).code, kOk);
  ASSERT_EQ(run({"tails", "--trials", "200", "--t-max", "40", "--out", out, "--set", "tails.sites=4", "--set",
                 "tails.hit_grid=0,2,4"}).code,
            kOk);
  ASSERT_EQ(run({"mu", "--trials", "60", "--t-max", "40", "--out", out, "--set", "mu.n_list=2,4,6"}).code, kOk);
  ASSERT_EQ(run({"shape", "--trials", "60", "--t-max", "10", "--out", out, "--set", "model.dimension=2", "--set",
                 "model.profile_tail=2", "--set", "model.gamma=1", "--set", "shape.t=10"}).code,
            kOk);
  ASSERT_EQ(run({"macro", "--trials", "3", "--out", out, "--set", "macro.levels=1", "--set", "macro.eps_pad=0.5"}).code,
            kOk);
  const std::vector<std::pair<std::string, std::string>> expected{
      {"trajectory.csv", "t,kind,x0,age_before,age_after"},
      {"environment.csv", "t,kind,x0,y0,mark"},
      {"extinction_tail.csv", "t,count,trials,freq"},
      {"mu.csv", "n,count,sigma_mean,sigma_lo,sigma_hi,t_count,t_mean,t_lo,t_hi,reverse_count,reverse_mean"},
      {"shape_inclusion.csv", "eps,survivors,inner,inner_lo,outer,outer_lo"},
      {"macro_bits.csv", "level,j,dir,open,explored,reachable"},
  };
  for (const auto& [file, header] : expected) {
    const std::string body = slurp(dir_ / file);
    EXPECT_EQ(body.substr(0, body.find('\n')), header) << file;
    const auto meta = nlohmann::json::parse(slurp(dir_ / (file + ".meta.json")));
    EXPECT_EQ(meta["file"], file);
  }
  for (const char* f : {"extinction_fit.csv", "hitting_constants.csv", "shape_mu.csv", "shape_cloud.csv",
                        "macro_anchors.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
}
