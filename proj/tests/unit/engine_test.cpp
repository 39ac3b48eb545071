#include "cpa/engine.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cpa/errors.hpp"
#include "cpa/validation.hpp"

namespace cpa {
namespace {

ModelParams constant1d(double lambda, double gamma = 1.0) {
  return ModelParams::make(1, AgeProfile::constant(lambda), gamma);
}

TEST(Evolve, EmptyStaysEmpty) {
  const Omega om(1, constant1d(3.0), 10.0);
  const Trajectory tr = evolve(om, Config{}, 10.0);
  EXPECT_TRUE(tr.events.empty());
  EXPECT_TRUE(tr.final_config().empty());
}

TEST(Evolve, SterileSiteFollowsItsOwnClocks) {
  const Omega om(4, ModelParams::make(1, AgeProfile::zero(), 2.0), 30.0);
  const Trajectory tr = evolve(om, Config::single(Site{0}), 30.0);
  const auto deaths = om.death_times(Site{0}, 0.0, 30.0);
  ASSERT_FALSE(deaths.empty());
  const auto mats = om.maturation_times(Site{0}, 0.0, deaths.front());
  ASSERT_EQ(tr.events.size(), mats.size() + 1);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    EXPECT_EQ(tr.events[i].kind, TransitionKind::Maturation);
    EXPECT_EQ(tr.events[i].time, mats[i]);
    EXPECT_EQ(tr.events[i].age_after, i + 2);
  }
  EXPECT_EQ(tr.events.back().kind, TransitionKind::Death);
  EXPECT_EQ(tr.events.back().time, deaths.front());
}

TEST(Evolve, TrajectoryInvariantsHold) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 60; ++i) {
    const auto sc = validation::random_scenario(rng, 1 + i % 2, 10.0);
    const Omega om(sc.seed, sc.params, sc.t);
    const Trajectory tr = evolve(om, sc.f, sc.t);
    EXPECT_EQ(validation::check_trajectory_invariants(tr), "");
    Simulator sim(om, sc.f);
    sim.run_until(sc.t / 2);
    EXPECT_EQ(sim.config(), tr.at(sc.t / 2));
  }
}

TEST(Evolve, HorizonAndRegionErrors) {
  const Omega om(1, constant1d(2.0), 5.0);
  EXPECT_THROW(evolve(om, Config::single(Site{0}), 6.0), HorizonExceeded);
  EXPECT_THROW(evolve(om, Config::single(Site{3}), 1.0, Box::centered(Site{0}, 3)), RegionError);
  EXPECT_NO_THROW(evolve(om, Config::single(Site{2}), 1.0, Box::centered(Site{0}, 3)));
}

TEST(Evolve, RegionConfinesToInterior) {
  const Omega om(8, constant1d(4.0), 40.0);
  const Box box = Box::centered(Site{0}, 4);
  const Trajectory tr = evolve(om, Config::single(Site{0}), 40.0, box);
  for (const auto& e : tr.events) EXPECT_TRUE(box.interior_contains(e.site));
}

TEST(Evolve, GuardRaisesBoundaryHit) {
  const Omega om(8, constant1d(4.0), 40.0);
  EXPECT_THROW(evolve(om, Config::cube(Site{0}, 1), 40.0, {}, Confinement{Box::centered(Site{0}, 2)}),
               BoundaryHit);
}

TEST(Region, PiecewiseSwitchPrunes) {
  const Region r = Region::piecewise({{0.0, 2.0, Box{Site{-10}, Site{10}}}, {1.0, 3.0, Box{Site{0}, Site{20}}}});
  ASSERT_EQ(r.segments().size(), 4u);
  EXPECT_TRUE(r.allows(Site{-5}, 0.5));
  EXPECT_TRUE(r.allows(Site{15}, 1.5));
  EXPECT_TRUE(r.allows(Site{-5}, 1.5));
  EXPECT_FALSE(r.allows(Site{-5}, 2.5));
  EXPECT_FALSE(r.allows(Site{5}, 3.5));
  EXPECT_FALSE(r.allows(Site{0}, -1.0));

  const Omega om(2, ModelParams::make(1, AgeProfile::zero(), 1.0), 10.0);
  Config f;
  f.set(Site{-3}, 1);
  f.set(Site{3}, 1);
  const Trajectory tr = evolve(om, f, 2.5, r);
  bool pruned = false;
  for (const auto& e : tr.events) {
    if (e.kind == TransitionKind::Prune) {
      pruned = true;
      EXPECT_EQ(e.site, Site{-3});
      EXPECT_EQ(e.time, 2.0);
    }
  }
  EXPECT_EQ(pruned, tr.at(1.99).alive(Site{-3}));
  EXPECT_THROW(Region::piecewise({{0.0, 1.0, Box{Site{0, 0}, Site{1, 1}}}, {0.0, 1.0, Box{Site{0, 5}, Site{1, 6}}}}),
               InvalidArgument);
}

TEST(Krone, YoungSitesAreSterile) {
  const ModelParams p = krone_params(3.0, 0.5);
  EXPECT_EQ(p.profile.rate(1), 0.0);
  EXPECT_EQ(p.profile.rate(2), 3.0);
  EXPECT_EQ(p.profile.rate(9), 3.0);
  const Omega om(5, p, 50.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Omega o(s, p, 50.0);
    const Trajectory tr = evolve(o, Config::single(Site{0}), 50.0);
    Config cur = tr.initial;
    for (const auto& e : tr.events) {
      if (e.kind == TransitionKind::Birth) EXPECT_GE(cur.at(e.source), 2u);
      cur.set(e.site, e.age_after);
    }
  }
  const Omega dead(5, krone_params(0.0, 1.0), 50.0);
  const Trajectory tr = evolve(dead, Config::cube(Site{0}, 3, 2), 50.0);
  for (const auto& e : tr.events) EXPECT_NE(e.kind, TransitionKind::Birth);
  EXPECT_TRUE(tr.final_config().empty());
}

TEST(Semigroup, TrivialSplits) {
  const Omega om(12, constant1d(2.5), 20.0);
  const Config f = Config::single(Site{0});
  EXPECT_TRUE(hold_semigroup_check(om, f, 0.0, 7.0));
  EXPECT_TRUE(hold_semigroup_check(om, f, 7.0, 0.0));
  EXPECT_THROW(hold_semigroup_check(om, f, 15.0, 7.0), HorizonExceeded);
}

TEST(Properties, RandomScenarios) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 40; ++i) {
    const auto sc = validation::random_scenario(rng, 1 + i % 2, 8.0);
    EXPECT_EQ(validation::check_attractivity(sc, rng), "");
    EXPECT_EQ(validation::check_additivity(sc, rng), "");
    EXPECT_EQ(validation::check_richardson(sc), "");
    EXPECT_EQ(validation::check_truncation(sc, rng), "");
    EXPECT_EQ(validation::check_profile_monotone(sc, rng), "");
    EXPECT_EQ(validation::check_translation(sc, rng), "");
    EXPECT_EQ(validation::check_semigroup(sc, rng), "");
  }
}

TEST(Richardson, EmptyAndMonotone) {
  const Omega om(3, constant1d(2.0), 10.0);
  EXPECT_TRUE(richardson_evolve(om, {}, 10.0).additions.empty());
  const auto g = richardson_evolve(om, {Site{0}}, 10.0);
  for (std::size_t i = 1; i < g.additions.size(); ++i) EXPECT_LE(g.additions[i - 1].first, g.additions[i].first);
  EXPECT_GE(g.at(10.0).size(), g.at(5.0).size());
}

TEST(Direct, EmptyStaysEmpty) {
  EXPECT_TRUE(evolve_direct(constant1d(3.0), Config{}, 10.0, 1).events.empty());
}

TEST(Direct, TrajectoryInvariantsHold) {
  const ModelParams p = ModelParams::make(2, AgeProfile{{0.0, 1.5}, 2.0}, 1.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Trajectory tr = evolve_direct(p, Config::cube(Site{0, 0}, 1), 5.0, s);
    EXPECT_EQ(validation::check_trajectory_invariants(tr), "");
  }
  const Trajectory tr = evolve_direct(p, Config::single(Site{0, 0}), 5.0, 1, Box::centered(Site{0, 0}, 2));
  for (const auto& e : tr.events) EXPECT_LE(e.site.sup_norm(), 1);
}

TEST(TrajectoryCsv, Schema) {
  const Omega om(3, constant1d(2.0), 3.0);
  const Trajectory tr = evolve(om, Config::single(Site{0}), 3.0);
  std::ostringstream os;
  write_trajectory_csv(os, tr, 1);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "t,kind,x0,age_before,age_after");
  EXPECT_NE(s.find("0,initial,0,0,1"), std::string::npos);
}

}  // namespace
}  // namespace cpa
