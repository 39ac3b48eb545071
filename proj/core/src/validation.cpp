#include "cpa/validation.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <sstream>

#include "cpa/parallel.hpp"

namespace cpa::validation {

namespace {

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

int uniform_int(std::mt19937_64& rng, int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

Site random_site(std::mt19937_64& rng, int dim, int radius) {
  Site x(dim);
  for (int i = 0; i < dim; ++i) x[i] = uniform_int(rng, -radius, radius);
  return x;
}

Omega omega_for(const Scenario& sc) { return Omega(sc.seed, sc.params, sc.t + 1.0); }

std::string at_time(const char* what, double t) {
  std::ostringstream os;
  os << what << " violated at t=" << t;
  return os.str();
}

Trajectory as_trajectory(const GrowthTrajectory& g) {
  Trajectory tr;
  for (const Site& x : g.initial) tr.initial.set(x, 1);
  for (const auto& [t, x] : g.additions) tr.events.push_back({t, TransitionKind::Birth, x, x, 0, 1});
  tr.t_end = g.t_end;
  return tr;
}

int support_radius(const Config& f) {
  std::int64_t r = 0;
  for (const auto& [x, a] : f) r = std::max(r, x.sup_norm());
  return static_cast<int>(r);
}

}  // namespace

Config random_config(std::mt19937_64& rng, int dim, int radius, int count, Age max_age) {
  Config c;
  for (int i = 0; i < count; ++i) {
    c.set(random_site(rng, dim, radius), static_cast<Age>(uniform_int(rng, 1, static_cast<int>(max_age))));
  }
  return c;
}

Scenario random_scenario(std::mt19937_64& rng, int dim, double t_max) {
  const double lam_max = dim == 1 ? 4.0 : 1.2;
  AgeProfile profile;
  const int m = uniform_int(rng, 0, 3);
  for (int i = 0; i < m; ++i) profile.head.push_back(uniform(rng, 0.0, lam_max));
  std::sort(profile.head.begin(), profile.head.end());
  if (uniform_int(rng, 0, 3) == 0 && !profile.head.empty()) profile.head.front() = 0.0;
  const double top = profile.head.empty() ? 0.0 : profile.head.back();
  profile.tail = uniform(rng, top, lam_max);
  const double gamma = uniform(rng, 0.3, 3.0);
  const double base = profile.tail * uniform(rng, 1.0, 1.5);
  Scenario sc;
  sc.params = ModelParams::make(dim, profile, gamma, base);
  sc.seed = rng();
  sc.f = random_config(rng, dim, 3, uniform_int(rng, 1, 6), 4);
  sc.t = uniform(rng, 0.5, t_max);
  return sc;
}

std::string check_attractivity(const Scenario& sc, std::mt19937_64& rng) {
  const Omega om = omega_for(sc);
  Config g = join(sc.f, random_config(rng, sc.params.dimension, 4, uniform_int(rng, 0, 4), 3));
  for (const auto& [x, a] : sc.f) {
    if (uniform_int(rng, 0, 1)) g.set(x, a + static_cast<Age>(uniform_int(rng, 0, 3)));
  }
  const Trajectory a = evolve(om, sc.f, sc.t);
  const Trajectory b = evolve(om, g, sc.t);
  const double bad = first_joint_failure({&a, &b}, [](const std::vector<Age>& c) { return c[0] <= c[1]; });
  return bad < 0 ? "" : at_time("attractivity", bad);
}

std::string check_additivity(const Scenario& sc, std::mt19937_64& rng) {
  const Omega om = omega_for(sc);
  const Config g = random_config(rng, sc.params.dimension, 4, uniform_int(rng, 1, 4), 4);
  const Trajectory a = evolve(om, sc.f, sc.t);
  const Trajectory b = evolve(om, g, sc.t);
  const Trajectory c = evolve(om, join(sc.f, g), sc.t);
  const double bad =
      first_joint_failure({&a, &b, &c}, [](const std::vector<Age>& s) { return s[2] == std::max(s[0], s[1]); });
  return bad < 0 ? "" : at_time("additivity", bad);
}

std::string check_richardson(const Scenario& sc) {
  const Omega om = omega_for(sc);
  const Trajectory a = evolve(om, sc.f, sc.t);
  const Trajectory r = as_trajectory(richardson_evolve(om, sc.f.support(), sc.t));
  const double bad =
      first_joint_failure({&a, &r}, [](const std::vector<Age>& s) { return s[0] == 0 || s[1] != 0; });
  return bad < 0 ? "" : at_time("richardson domination", bad);
}

std::string check_truncation(const Scenario& sc, std::mt19937_64& rng) {
  const Omega om = omega_for(sc);
  const int d = sc.params.dimension;
  const int r_small = support_radius(sc.f) + 1 + uniform_int(rng, 0, 3);
  const int r_large = r_small + uniform_int(rng, 1, 4);
  const Box small = Box::centered(Site::origin(d), r_small);
  const Box large = Box::centered(Site::origin(d), r_large);
  const Trajectory a = evolve(om, sc.f, sc.t, small);
  const Trajectory b = evolve(om, sc.f, sc.t, large);
  const Trajectory c = evolve(om, sc.f, sc.t);
  const double bad = first_joint_failure(
      {&a, &b, &c}, [](const std::vector<Age>& s) { return s[0] <= s[1] && s[1] <= s[2]; });
  if (bad >= 0) return at_time("truncation monotonicity", bad);
  const Trajectory a2 = evolve(om.resampled_outside(small, rng()), sc.f, sc.t, small);
  if (a2.events != a.events) return "truncated process depends on events outside its box";
  return "";
}

std::string check_profile_monotone(const Scenario& sc, std::mt19937_64& rng) {
  AgeProfile bigger = sc.params.profile;
  double bump = 0.0;
  for (double& l : bigger.head) {
    bump += uniform(rng, 0.0, 0.5);
    l += bump;
  }
  bigger.tail += bump + uniform(rng, 0.0, 0.5);
  const double base = std::max(sc.params.base_rate, bigger.tail);
  const int d = sc.params.dimension;
  const Omega lo(sc.seed, ModelParams::make(d, sc.params.profile, sc.params.gamma, base), sc.t + 1.0);
  const Omega hi(sc.seed, ModelParams::make(d, bigger, sc.params.gamma, base), sc.t + 1.0);
  const Trajectory a = evolve(lo, sc.f, sc.t);
  const Trajectory b = evolve(hi, sc.f, sc.t);
  const double bad = first_joint_failure({&a, &b}, [](const std::vector<Age>& s) { return s[0] <= s[1]; });
  return bad < 0 ? "" : at_time("profile monotonicity", bad);
}

std::string check_translation(const Scenario& sc, std::mt19937_64& rng) {
  const Omega om = omega_for(sc);
  const Site x = random_site(rng, sc.params.dimension, 6);
  const Trajectory a = evolve(om, sc.f, sc.t);
  Trajectory b = evolve(om.shift_space(x), sc.f.translated(-x), sc.t);
  for (Transition& tr : b.events) {
    tr.site = tr.site + x;
    tr.source = tr.source + x;
  }
  if (a.events != b.events) return "translation covariance violated by x=" + x.to_string();
  return "";
}

std::string check_semigroup(const Scenario& sc, std::mt19937_64& rng) {
  const Omega om = omega_for(sc);
  const double t = uniform(rng, 0.0, sc.t);
  const double s = sc.t - t;
  if (!hold_semigroup_check(om, sc.f, s, t)) {
    std::ostringstream os;
    os << "semigroup identity violated for t=" << t << " s=" << s;
    return os.str();
  }
  return "";
}

std::string check_trajectory_invariants(const Trajectory& traj) {
  Config cur = traj.initial;
  double last = 0.0;
  for (const Transition& e : traj.events) {
    std::ostringstream os;
    os << "event at t=" << e.time << ": ";
    if (e.time < last) return os.str() + "time went backwards";
    if (e.time == last && e.kind != TransitionKind::Prune && last > 0.0) return os.str() + "repeated time";
    last = e.time;
    const Age before = cur.at(e.site);
    if (before != e.age_before) return os.str() + "age_before does not match the state";
    switch (e.kind) {
      case TransitionKind::Birth:
        if (before != 0 || e.age_after != 1) return os.str() + "birth must revive a dead site at age 1";
        if (!cur.alive(e.source) || (e.source - e.site).l1_norm() != 1) return os.str() + "bad parent";
        break;
      case TransitionKind::Maturation:
        if (before == 0 || e.age_after != before + 1) return os.str() + "maturation must add one";
        break;
      case TransitionKind::Death:
      case TransitionKind::Prune:
        if (before == 0 || e.age_after != 0) return os.str() + "death must remove a live site";
        break;
    }
    cur.set(e.site, e.age_after);
  }
  if (traj.at(traj.t_end) != cur) return "replay mismatch";
  return "";
}

std::uint64_t SuiteReport::violations() const {
  return std::accumulate(checks.begin(), checks.end(), std::uint64_t{0},
                         [](std::uint64_t n, const CheckTally& c) { return n + c.violations; });
}

SuiteReport run_pathwise_suite(std::uint64_t scenarios, std::uint64_t seed, double t_max, int threads) {
  static const std::array<const char*, 8> names{"trajectory",   "attractivity", "additivity",  "richardson",
                                                "truncation",   "profile",      "translation", "semigroup"};
  const auto results = parallel_map(scenarios, threads, [&](std::size_t i) {
    std::mt19937_64 rng(trial_seed(seed, i));
    const Scenario sc = random_scenario(rng, 1 + static_cast<int>(i % 2), t_max);
    std::array<std::string, 8> out;
    out[0] = check_trajectory_invariants(evolve(omega_for(sc), sc.f, sc.t));
    out[1] = check_attractivity(sc, rng);
    out[2] = check_additivity(sc, rng);
    out[3] = check_richardson(sc);
    out[4] = check_truncation(sc, rng);
    out[5] = check_profile_monotone(sc, rng);
    out[6] = check_translation(sc, rng);
    out[7] = check_semigroup(sc, rng);
    return out;
  });
  SuiteReport report;
  report.scenarios = scenarios;
  for (const char* n : names) report.checks.push_back({n, 0});
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (results[i][c].empty()) continue;
      ++report.checks[c].violations;
      if (report.failures.size() < 20) report.failures.push_back("scenario " + std::to_string(i) + ": " + results[i][c]);
    }
  }
  return report;
}

}  // namespace cpa::validation
