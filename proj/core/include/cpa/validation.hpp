#pragma once

// Randomized pathwise checks of the coupling properties, shared by the unit
// tests, the `validate` command and the acceptance runner.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cpa/engine.hpp"

namespace cpa::validation {

struct Scenario {
  ModelParams params;
  std::uint64_t seed = 0;
  Config f;
  double t = 0.0;
};

Scenario random_scenario(std::mt19937_64& rng, int dim, double t_max = 20.0);
Config random_config(std::mt19937_64& rng, int dim, int radius, int count, Age max_age);

// Each returns an empty string on success, a description of the first
// violation otherwise.
std::string check_attractivity(const Scenario& sc, std::mt19937_64& rng);
std::string check_additivity(const Scenario& sc, std::mt19937_64& rng);
std::string check_richardson(const Scenario& sc);
std::string check_truncation(const Scenario& sc, std::mt19937_64& rng);
std::string check_profile_monotone(const Scenario& sc, std::mt19937_64& rng);
std::string check_translation(const Scenario& sc, std::mt19937_64& rng);
std::string check_semigroup(const Scenario& sc, std::mt19937_64& rng);
std::string check_trajectory_invariants(const Trajectory& traj);

struct CheckTally {
  std::string name;
  std::uint64_t violations = 0;
};

struct SuiteReport {
  std::uint64_t scenarios = 0;
  std::vector<CheckTally> checks;
  std::vector<std::string> failures;  // first few violation messages, by scenario

  std::uint64_t violations() const;
  bool ok() const { return violations() == 0; }
};

/// Runs every check on `scenarios` random scenarios; scenario i has dimension
/// 1 + i % 2 and its own generator seeded from (seed, i).
SuiteReport run_pathwise_suite(std::uint64_t scenarios, std::uint64_t seed, double t_max = 20.0, int threads = 1);

// Pointwise joint check of several trajectories: check(ages) receives the
// ages of one site across the trajectories. It is evaluated on every site at
// time 0 and afterwards on the sites touched at each event time. Returns the
// first failing time, or -1 when all pass.
template <class F>
double first_joint_failure(const std::vector<const Trajectory*>& trs, F&& check) {
  std::vector<Config> cur;
  std::vector<std::size_t> idx(trs.size(), 0);
  for (const auto* tr : trs) cur.push_back(tr->initial);
  std::vector<Age> ages(trs.size());
  auto holds_at = [&](const Site& x) {
    for (std::size_t i = 0; i < cur.size(); ++i) ages[i] = cur[i].at(x);
    return check(ages);
  };
  for (const Config& c : cur) {
    for (const auto& kv : c) {
      if (!holds_at(kv.first)) return 0.0;
    }
  }
  std::vector<Site> touched;
  for (;;) {
    double next = -1.0;
    for (std::size_t i = 0; i < trs.size(); ++i) {
      if (idx[i] < trs[i]->events.size()) {
        const double t = trs[i]->events[idx[i]].time;
        if (next < 0.0 || t < next) next = t;
      }
    }
    if (next < 0.0) return -1.0;
    touched.clear();
    for (std::size_t i = 0; i < trs.size(); ++i) {
      while (idx[i] < trs[i]->events.size() && trs[i]->events[idx[i]].time <= next) {
        const Transition& e = trs[i]->events[idx[i]++];
        cur[i].set(e.site, e.age_after);
        touched.push_back(e.site);
      }
    }
    for (const Site& x : touched) {
      if (!holds_at(x)) return next;
    }
  }
}

}  // namespace cpa::validation
